#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "charnmt/autodiff.hpp"
#include "charnmt/model.hpp"
#include "charnmt/rng.hpp"
#include "charnmt/tensor.hpp"
#include "charnmt/vocab.hpp"

namespace charnmt::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::abs(a.data[i] - b.data[i]));
  }
  return m;
}

inline bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return false;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] != b.data[i]) return false;
  }
  return true;
}

inline Vocabulary make_vocab(const std::u32string& chars) {
  Vocabulary v;
  for (char32_t c : chars) v.add_char(c, 1);
  return v;
}

inline Model make_model(Variant variant, const std::u32string& src_chars,
                        const std::u32string& trg_chars, std::int64_t embed, std::int64_t hidden,
                        std::int64_t attn, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.embed_size = embed;
  cfg.hidden_size = hidden;
  cfg.attn_size = attn;
  return Model(cfg, make_vocab(src_chars), make_vocab(trg_chars), seed);
}

// Independent scalar-loop GRU, the hand-unrolling oracle for everything
// recurrent. Matches the documented update/reset/candidate equations.
inline std::vector<double> scalar_gru(const ParamSet& p, const std::string& prefix,
                                      const std::vector<double>& x, const std::vector<double>& h) {
  const std::size_t m = h.size(), in = x.size();
  auto mat = [&](const char* n) -> const Tensor& { return p.at(prefix + n); };
  auto affine = [&](const Tensor& w, const std::vector<double>& v, const Tensor& u,
                    const std::vector<double>& hv, const Tensor& b, std::size_t i) {
    double acc = b.data[i];
    for (std::size_t j = 0; j < in; ++j) acc += w.data[i * in + j] * v[j];
    for (std::size_t j = 0; j < m; ++j) acc += u.data[i * m + j] * hv[j];
    return acc;
  };
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };

  std::vector<double> z(m), r(m), rh(m), c(m), out(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = sigmoid(affine(mat(".w_z"), x, mat(".u_z"), h, mat(".b_z"), i));
  for (std::size_t i = 0; i < m; ++i) r[i] = sigmoid(affine(mat(".w_r"), x, mat(".u_r"), h, mat(".b_r"), i));
  for (std::size_t i = 0; i < m; ++i) rh[i] = r[i] * h[i];
  for (std::size_t i = 0; i < m; ++i) c[i] = std::tanh(affine(mat(".w_c"), x, mat(".u_c"), rh, mat(".b_c"), i));
  for (std::size_t i = 0; i < m; ++i) out[i] = (1.0 - z[i]) * h[i] + z[i] * c[i];
  return out;
}

// Column id of an embedding table as a plain vector.
inline std::vector<double> embedding_column(const Tensor& table, int id) {
  std::vector<double> col(static_cast<std::size_t>(table.shape[0]));
  for (std::int64_t j = 0; j < table.shape[0]; ++j) col[static_cast<std::size_t>(j)] = table.at(j, id);
  return col;
}

}  // namespace charnmt::testing
