#include "charnmt/layers.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "charnmt/errors.hpp"
#include "charnmt/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace charnmt;
using charnmt::testing::random_tensor;

TEST_SUITE_BEGIN("layers");

namespace {

ParamSet make_gru_params(const GruSpec& spec, Rng& rng) {
  ParamSet p;
  spec.add_to(p, rng);
  return p;
}

using charnmt::testing::scalar_gru;

std::vector<double> gru_reference(const ParamSet& p, const std::string& prefix,
                                  const std::vector<double>& x, const std::vector<double>& h) {
  return scalar_gru(p, prefix, x, h);
}

Tensor run_gru(const GruSpec& spec, const ParamSet& params, const Tensor& x, const Tensor& h) {
  Graph g;
  BoundParams bound = bind_params(g, params);
  GruVars gru = bind_gru(spec, bound);
  Var out = gru_step(g, g.constant(x), g.constant(h), gru);
  return g.value(out);
}

}  // namespace

TEST_CASE("embed identity table") {
  Graph g;
  Var table = g.constant(Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  std::array<int, 1> ids{0};
  Var out = embed(g, table, ids);
  CHECK(g.value(out).shape == Shape{1, 3});
  CHECK(g.value(out).data == std::vector<double>{1, 0, 0});
}

TEST_CASE("embed repeats ids") {
  Rng rng(1);
  Tensor table = random_tensor({4, 5}, rng);
  Graph g;
  Var t = g.constant(table);
  std::array<int, 2> ids{2, 2};
  const Tensor& out = g.value(embed(g, t, ids));
  for (std::int64_t j = 0; j < 4; ++j) CHECK(out.at(0, j) == out.at(1, j));
}

TEST_CASE("embed matches direct indexing") {
  Rng rng(2);
  Tensor table = random_tensor({4, 6}, rng);
  Graph g;
  Var t = g.constant(table);
  std::array<int, 2> ids{1, 0};
  const Tensor& out = g.value(embed(g, t, ids));
  for (std::int64_t j = 0; j < 4; ++j) {
    CHECK(out.at(0, j) == table.at(j, 1));
    CHECK(out.at(1, j) == table.at(j, 0));
  }
}

TEST_CASE("embed rejects out-of-range ids") {
  Graph g;
  Var t = g.constant(Tensor({2, 3}));
  std::array<int, 1> ids{3};
  CHECK_THROWS_AS(embed(g, t, ids), vocab_error);
}

TEST_CASE("gru with zero parameters and zero state stays at zero") {
  GruSpec spec{"gru", 3, 4};
  ParamSet p;
  p.add("gru.w_z", Tensor::zeros({4, 3}));
  p.add("gru.u_z", Tensor::zeros({4, 4}));
  p.add("gru.b_z", Tensor::zeros({4}), ParamSet::Kind::kBias);
  p.add("gru.w_r", Tensor::zeros({4, 3}));
  p.add("gru.u_r", Tensor::zeros({4, 4}));
  p.add("gru.b_r", Tensor::zeros({4}), ParamSet::Kind::kBias);
  p.add("gru.w_c", Tensor::zeros({4, 3}));
  p.add("gru.u_c", Tensor::zeros({4, 4}));
  p.add("gru.b_c", Tensor::zeros({4}), ParamSet::Kind::kBias);
  Tensor x({3}, {0.9, -0.4, 2.0});
  Tensor h = Tensor::zeros({4});
  Tensor out = run_gru(spec, p, x, h);
  for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("saturated update gate reduces to the candidate state") {
  Rng rng(5);
  GruSpec spec{"gru", 3, 3};
  ParamSet p = make_gru_params(spec, rng);
  for (double& v : p.at("gru.b_z").data) v = 30.0;
  Tensor x = random_tensor({3}, rng);
  Tensor h = random_tensor({3}, rng);
  Tensor out = run_gru(spec, p, x, h);

  // Candidate via the scalar reference with z forced to 1.
  std::vector<double> ref = gru_reference(p, "gru", x.data, h.data);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(out.data[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
  // And explicitly: h' is within 1e-9 of tanh(W x + U (r.h) + b).
  ParamSet q;
  for (const auto& name : p.names()) q.add(name, p.at(name), p.kind(name));
  for (double& v : q.at("gru.b_z").data) v = 1000.0;  // exact saturation
  std::vector<double> cand = gru_reference(q, "gru", x.data, h.data);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out.data[i] - cand[i]) < 1e-9);
}

TEST_CASE("gru matches the scalar-loop reference") {
  Rng rng(7);
  GruSpec spec{"gru", 3, 3};
  ParamSet p = make_gru_params(spec, rng);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor x = random_tensor({3}, rng);
    Tensor h = random_tensor({3}, rng);
    Tensor out = run_gru(spec, p, x, h);
    std::vector<double> ref = gru_reference(p, "gru", x.data, h.data);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(out.data[i] - ref[i]) <= 1e-12);
  }
}

TEST_CASE("gru output stays inside (-1,1) when the previous state does") {
  Rng rng(9);
  GruSpec spec{"gru", 4, 5};
  ParamSet p = make_gru_params(spec, rng);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor x = random_tensor({4}, rng, -3.0, 3.0);
    Tensor h = random_tensor({5}, rng, -0.999, 0.999);
    Tensor out = run_gru(spec, p, x, h);
    for (double v : out.data) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("gru batched rows equal per-row results") {
  Rng rng(13);
  GruSpec spec{"gru", 3, 4};
  ParamSet p = make_gru_params(spec, rng);
  Tensor xb = random_tensor({2, 3}, rng);
  Tensor hb = random_tensor({2, 4}, rng);

  Graph g;
  BoundParams bound = bind_params(g, p);
  GruVars gru = bind_gru(spec, bound);
  const Tensor& out = g.value(gru_step(g, g.constant(xb), g.constant(hb), gru));
  for (int row = 0; row < 2; ++row) {
    std::vector<double> x(xb.data.begin() + row * 3, xb.data.begin() + (row + 1) * 3);
    std::vector<double> h(hb.data.begin() + row * 4, hb.data.begin() + (row + 1) * 4);
    std::vector<double> ref = gru_reference(p, "gru", x, h);
    for (std::int64_t j = 0; j < 4; ++j) CHECK(out.at(row, j) == doctest::Approx(ref[j]).epsilon(1e-14));
  }
}

TEST_CASE("gru passes gradient checking") {
  Rng rng(21);
  GruSpec spec{"gru", 3, 4};
  ParamSet p = make_gru_params(spec, rng);
  // Give biases non-zero values so their gradients are probed off-origin.
  for (const auto& name : p.names()) {
    if (p.kind(name) == ParamSet::Kind::kBias) {
      for (double& v : p.at(name).data) v = rng.uniform(-0.5, 0.5);
    }
  }
  Tensor x = random_tensor({3}, rng);
  Tensor h = random_tensor({4}, rng);
  Tensor w = random_tensor({4}, rng);
  double err = grad_check(
      [&](Graph& g, const BoundParams& bound) {
        GruVars gru = bind_gru(spec, bound);
        Var out = gru_step(g, g.constant(x), g.constant(h), gru);
        return g.reduce_sum(g.mul(out, g.constant(w)));
      },
      p, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("projection with zero weights is uniform") {
  ParamSet p;
  p.add("out.w", Tensor::zeros({300, 4}));
  p.add("out.b", Tensor::zeros({300}), ParamSet::Kind::kBias);
  ProjectionSpec spec{"out", 300, 4};
  Graph g;
  BoundParams bound = bind_params(g, p);
  Var probs = project_softmax(g, g.constant(Tensor({4}, {1, 2, 3, 4})), bind_projection(spec, bound));
  for (double v : g.value(probs).data) CHECK(v == doctest::Approx(1.0 / 300).epsilon(1e-12));
}

TEST_CASE("dominant logit takes nearly all mass") {
  Rng rng(31);
  ParamSet p;
  p.add("out.w", Tensor::zeros({10, 3}));
  Tensor b = Tensor::zeros({10});
  b.at(7) = 30.0;
  p.add("out.b", b, ParamSet::Kind::kBias);
  ProjectionSpec spec{"out", 10, 3};
  Graph g;
  BoundParams bound = bind_params(g, p);
  Var probs = project_softmax(g, g.constant(random_tensor({3}, rng)), bind_projection(spec, bound));
  CHECK(g.value(probs).at(7) > 0.999);
}

TEST_CASE("projection softmax matches extended-precision direct evaluation") {
  Rng rng(33);
  ProjectionSpec spec{"out", 6, 4};
  ParamSet p;
  spec.add_to(p, rng);
  Tensor s = random_tensor({4}, rng);

  Graph g;
  BoundParams bound = bind_params(g, p);
  ProjectionVars proj = bind_projection(spec, bound);
  const Tensor& probs = g.value(project_softmax(g, g.constant(s), proj));

  const Tensor& w = p.at("out.w");
  const Tensor& b = p.at("out.b");
  long double denom = 0.0L;
  std::array<long double, 6> num{};
  for (int k = 0; k < 6; ++k) {
    long double logit = b.at(k);
    for (int j = 0; j < 4; ++j) logit += static_cast<long double>(w.at(k, j)) * s.at(j);
    num[static_cast<std::size_t>(k)] = std::exp(logit);
    denom += num[static_cast<std::size_t>(k)];
  }
  double sum = 0.0;
  for (int k = 0; k < 6; ++k) {
    CHECK(probs.at(k) == doctest::Approx(static_cast<double>(num[static_cast<std::size_t>(k)] / denom))
                             .epsilon(1e-12));
    sum += probs.at(k);
  }
  CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("projection passes gradient checking") {
  Rng rng(35);
  ProjectionSpec spec{"out", 5, 4};
  ParamSet p;
  spec.add_to(p, rng);
  Tensor s = random_tensor({4}, rng);
  Tensor w = random_tensor({5}, rng);
  double err = grad_check(
      [&](Graph& g, const BoundParams& bound) {
        Var probs = project_softmax(g, g.constant(s), bind_projection(spec, bound));
        return g.reduce_sum(g.mul(probs, g.constant(w)));
      },
      p, 1e-5);
  CHECK(err < 1e-4);
}

TEST_SUITE_END();
