#pragma once

#include <cstdint>
#include <string>

#include "charnmt/autodiff.hpp"
#include "charnmt/layers.hpp"
#include "charnmt/vocab.hpp"

namespace charnmt {

enum class Variant { kChar, kChar2Word };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kChar;
  int src_vocab_size = 0;
  int trg_vocab_size = 0;
  std::int64_t embed_size = 256;   // source and target embeddings
  std::int64_t hidden_size = 400;  // per encoder direction; also decoder size
  std::int64_t attn_size = 300;

  std::int64_t annotation_size() const { return 2 * hidden_size; }
};

// The full parameter set for one variant, with vocabularies. The char
// variant runs a bi-directional character GRU; char2word runs a forward
// character GRU plus a bi-directional GRU over states sampled at word
// boundaries. Both share the attention/decoder/output structure.
class Model {
 public:
  Model() = default;
  Model(ModelConfig cfg, Vocabulary src_vocab, Vocabulary trg_vocab, std::uint64_t seed);

  ModelConfig config;
  Vocabulary src_vocab;
  Vocabulary trg_vocab;
  ParamSet params;

  EmbeddingSpec src_embed;
  EmbeddingSpec trg_embed;
  GruSpec enc_fwd;   // character forward GRU (both variants)
  GruSpec enc_bwd;   // character backward GRU (char variant)
  GruSpec word_fwd;  // word-level GRUs (char2word variant)
  GruSpec word_bwd;
  GruSpec dec;
  ProjectionSpec out;

  int space_id() const { return src_vocab.id_of(U' '); }
};

struct AttnVars {
  Var w, u, v, b;
};

// All parameters bound as leaves of one graph.
struct ModelVars {
  const Model* model = nullptr;
  Var src_embed, trg_embed;
  GruVars enc_fwd, enc_bwd, word_fwd, word_bwd, dec;
  AttnVars attn;
  Var init_w, init_b;
  ProjectionVars out;
};

ModelVars bind_model(Graph& g, const Model& model, const BoundParams& bound);

// Non-bias parameters, for the L2 term.
std::vector<Var> weight_vars(const Model& model, const BoundParams& bound);

}  // namespace charnmt
