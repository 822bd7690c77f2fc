#include "charnmt/model.hpp"

#include "charnmt/errors.hpp"
#include "charnmt/rng.hpp"

namespace charnmt {

std::string variant_name(Variant v) {
  return v == Variant::kChar ? "char" : "char2word";
}

Variant variant_from_name(const std::string& name) {
  if (name == "char") return Variant::kChar;
  if (name == "char2word") return Variant::kChar2Word;
  throw config_error("unknown model variant: " + name + " (want char or char2word)");
}

Model::Model(ModelConfig cfg, Vocabulary src, Vocabulary trg, std::uint64_t seed)
    : config(cfg), src_vocab(std::move(src)), trg_vocab(std::move(trg)) {
  config.src_vocab_size = src_vocab.size();
  config.trg_vocab_size = trg_vocab.size();
  if (config.embed_size <= 0 || config.hidden_size <= 0 || config.attn_size <= 0) {
    throw config_error("model sizes must be positive");
  }

  const std::int64_t m_e = config.embed_size;
  const std::int64_t m = config.hidden_size;
  const std::int64_t m_h = config.annotation_size();

  src_embed = EmbeddingSpec{"src_embed", m_e, config.src_vocab_size};
  trg_embed = EmbeddingSpec{"trg_embed", m_e, config.trg_vocab_size};
  enc_fwd = GruSpec{"enc_fwd", m_e, m};
  enc_bwd = GruSpec{"enc_bwd", m_e, m};
  word_fwd = GruSpec{"word_fwd", m, m};
  word_bwd = GruSpec{"word_bwd", m, m};
  dec = GruSpec{"dec", m_e + m_h, m};
  out = ProjectionSpec{"out", config.trg_vocab_size, m};

  Rng rng(Rng::derive(seed, 0x706172616dULL));
  src_embed.add_to(params, rng);
  enc_fwd.add_to(params, rng);
  if (config.variant == Variant::kChar) {
    enc_bwd.add_to(params, rng);
  } else {
    word_fwd.add_to(params, rng);
    word_bwd.add_to(params, rng);
  }
  trg_embed.add_to(params, rng);
  dec.add_to(params, rng);
  params.add("attn.w", glorot_uniform(config.attn_size, m, rng));
  params.add("attn.u", glorot_uniform(config.attn_size, m_h, rng));
  params.add("attn.v", Tensor({config.attn_size}, glorot_uniform(config.attn_size, 1, rng).data));
  params.add("attn.b", Tensor::zeros({config.attn_size}), ParamSet::Kind::kBias);
  params.add("init.w", glorot_uniform(m, m_h, rng));
  params.add("init.b", Tensor::zeros({m}), ParamSet::Kind::kBias);
  out.add_to(params, rng);
}

ModelVars bind_model(Graph& g, const Model& model, const BoundParams& bound) {
  (void)g;
  ModelVars v;
  v.model = &model;
  v.src_embed = bound.at("src_embed");
  v.trg_embed = bound.at("trg_embed");
  v.enc_fwd = bind_gru(model.enc_fwd, bound);
  if (model.config.variant == Variant::kChar) {
    v.enc_bwd = bind_gru(model.enc_bwd, bound);
  } else {
    v.word_fwd = bind_gru(model.word_fwd, bound);
    v.word_bwd = bind_gru(model.word_bwd, bound);
  }
  v.dec = bind_gru(model.dec, bound);
  v.attn = AttnVars{bound.at("attn.w"), bound.at("attn.u"), bound.at("attn.v"), bound.at("attn.b")};
  v.init_w = bound.at("init.w");
  v.init_b = bound.at("init.b");
  v.out = bind_projection(model.out, bound);
  return v;
}

std::vector<Var> weight_vars(const Model& model, const BoundParams& bound) {
  std::vector<Var> weights;
  for (const auto& [name, var] : bound.vars) {
    if (model.params.kind(name) == ParamSet::Kind::kWeight) weights.push_back(var);
  }
  return weights;
}

}  // namespace charnmt
