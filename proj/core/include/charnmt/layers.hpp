#pragma once

#include <span>
#include <string>
#include <vector>

#include "charnmt/autodiff.hpp"
#include "charnmt/rng.hpp"
#include "charnmt/tensor.hpp"

namespace charnmt {

// Uniform init in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))];
// biases start at zero.
Tensor glorot_uniform(std::int64_t fan_out, std::int64_t fan_in, Rng& rng);

// Embedding matrix of shape (embed_dim x vocab_size); column v is the
// embedding of id v.
struct EmbeddingSpec {
  std::string name;
  std::int64_t embed_dim = 0;
  std::int64_t vocab_size = 0;

  void add_to(ParamSet& params, Rng& rng) const;
  Var bind(const BoundParams& bound) const { return bound.at(name); }
};

// Rows of the result are the embeddings of ids, in order.
Var embed(Graph& g, Var table, std::span<const int> ids);

// Gated recurrent unit:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   c = tanh(W_c x + U_c (r.h) + b_c)
//   h' = (1 - z).h + z.c
struct GruSpec {
  std::string prefix;
  std::int64_t input_size = 0;
  std::int64_t hidden_size = 0;

  void add_to(ParamSet& params, Rng& rng) const;
};

struct GruVars {
  Var w_z, u_z, b_z;
  Var w_r, u_r, b_r;
  Var w_c, u_c, b_c;
  std::int64_t hidden_size = 0;
};

GruVars bind_gru(const GruSpec& spec, const BoundParams& bound);

// One step. x is (batch x input) or rank-1 (input); h_prev matches with
// hidden columns. Returns the new hidden state.
Var gru_step(Graph& g, Var x, Var h_prev, const GruVars& gru);

// Output layer: logits = W_y s + b_y over the target vocabulary.
struct ProjectionSpec {
  std::string prefix;
  std::int64_t classes = 0;
  std::int64_t input_size = 0;

  void add_to(ParamSet& params, Rng& rng) const;
};

struct ProjectionVars {
  Var w, b;
};

ProjectionVars bind_projection(const ProjectionSpec& spec, const BoundParams& bound);

Var project_logits(Graph& g, Var s, const ProjectionVars& proj);
Var project_softmax(Graph& g, Var s, const ProjectionVars& proj);
Var project_log_softmax(Graph& g, Var s, const ProjectionVars& proj);

}  // namespace charnmt
