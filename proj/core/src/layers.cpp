#include "charnmt/layers.hpp"

#include <cmath>

#include "charnmt/errors.hpp"

namespace charnmt {

Tensor glorot_uniform(std::int64_t fan_out, std::int64_t fan_in, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_out, fan_in});
  for (double& x : t.data) x = rng.uniform(-limit, limit);
  return t;
}

void EmbeddingSpec::add_to(ParamSet& params, Rng& rng) const {
  params.add(name, glorot_uniform(embed_dim, vocab_size, rng));
}

Var embed(Graph& g, Var table, std::span<const int> ids) {
  const Tensor& t = g.value(table);
  for (int id : ids) {
    if (id < 0 || id >= t.shape[1]) {
      throw vocab_error("embed: id " + std::to_string(id) + " outside vocabulary of size " +
                        std::to_string(t.shape[1]));
    }
  }
  return g.gather_cols(table, std::vector<int>(ids.begin(), ids.end()));
}

void GruSpec::add_to(ParamSet& params, Rng& rng) const {
  params.add(prefix + ".w_z", glorot_uniform(hidden_size, input_size, rng));
  params.add(prefix + ".u_z", glorot_uniform(hidden_size, hidden_size, rng));
  params.add(prefix + ".b_z", Tensor::zeros({hidden_size}), ParamSet::Kind::kBias);
  params.add(prefix + ".w_r", glorot_uniform(hidden_size, input_size, rng));
  params.add(prefix + ".u_r", glorot_uniform(hidden_size, hidden_size, rng));
  params.add(prefix + ".b_r", Tensor::zeros({hidden_size}), ParamSet::Kind::kBias);
  params.add(prefix + ".w_c", glorot_uniform(hidden_size, input_size, rng));
  params.add(prefix + ".u_c", glorot_uniform(hidden_size, hidden_size, rng));
  params.add(prefix + ".b_c", Tensor::zeros({hidden_size}), ParamSet::Kind::kBias);
}

GruVars bind_gru(const GruSpec& spec, const BoundParams& bound) {
  GruVars v;
  v.w_z = bound.at(spec.prefix + ".w_z");
  v.u_z = bound.at(spec.prefix + ".u_z");
  v.b_z = bound.at(spec.prefix + ".b_z");
  v.w_r = bound.at(spec.prefix + ".w_r");
  v.u_r = bound.at(spec.prefix + ".u_r");
  v.b_r = bound.at(spec.prefix + ".b_r");
  v.w_c = bound.at(spec.prefix + ".w_c");
  v.u_c = bound.at(spec.prefix + ".u_c");
  v.b_c = bound.at(spec.prefix + ".b_c");
  v.hidden_size = spec.hidden_size;
  return v;
}

Var gru_step(Graph& g, Var x, Var h_prev, const GruVars& gru) {
  Var z = g.sigmoid(g.add_rows(g.add(g.matmul_nt(x, gru.w_z), g.matmul_nt(h_prev, gru.u_z)), gru.b_z));
  Var r = g.sigmoid(g.add_rows(g.add(g.matmul_nt(x, gru.w_r), g.matmul_nt(h_prev, gru.u_r)), gru.b_r));
  Var c = g.tanh(g.add_rows(
      g.add(g.matmul_nt(x, gru.w_c), g.matmul_nt(g.mul(r, h_prev), gru.u_c)), gru.b_c));
  // (1-z).h + z.c, written as h + z.(c-h).
  return g.add(h_prev, g.mul(z, g.sub(c, h_prev)));
}

void ProjectionSpec::add_to(ParamSet& params, Rng& rng) const {
  params.add(prefix + ".w", glorot_uniform(classes, input_size, rng));
  params.add(prefix + ".b", Tensor::zeros({classes}), ParamSet::Kind::kBias);
}

ProjectionVars bind_projection(const ProjectionSpec& spec, const BoundParams& bound) {
  return ProjectionVars{bound.at(spec.prefix + ".w"), bound.at(spec.prefix + ".b")};
}

Var project_logits(Graph& g, Var s, const ProjectionVars& proj) {
  return g.add_rows(g.matmul_nt(s, proj.w), proj.b);
}

Var project_softmax(Graph& g, Var s, const ProjectionVars& proj) {
  return g.softmax_rows(project_logits(g, s, proj));
}

Var project_log_softmax(Graph& g, Var s, const ProjectionVars& proj) {
  return g.log_softmax_rows(project_logits(g, s, proj));
}

}  // namespace charnmt
