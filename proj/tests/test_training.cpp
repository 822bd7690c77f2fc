#include "charnmt/training.hpp"

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "charnmt/errors.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace charnmt;
using charnmt::testing::make_model;
using charnmt::testing::random_tensor;

TEST_SUITE_BEGIN("training");

namespace {

Model tiny_model(Variant v, std::uint64_t seed = 1) {
  return make_model(v, U"abcde ", U"xyz", 3, 4, 3, seed);
}

Corpus tiny_corpus(const Model& m) {
  RawCorpus raw;
  raw.src = {U"abc", U"de", U"a b", U"edcba"};
  raw.trg = {U"xy", U"z", U"yx", U"zzz"};
  return make_corpus(raw, m.src_vocab, m.trg_vocab);
}

double batch_loss_value(Model& m, const Batch& batch, double lambda) {
  Graph g;
  BoundParams bound = bind_params(g, m.params);
  ModelVars mv = bind_model(g, m, bound);
  std::vector<Var> weights = weight_vars(m, bound);
  return g.value(batch_loss(g, batch, mv, weights, lambda).loss).data[0];
}

}  // namespace

TEST_CASE("uniform predictions cost ln K per position") {
  Graph g;
  Var logits = g.leaf(Tensor::zeros({1, 4}));
  Var logprobs = g.log_softmax_rows(logits);
  std::array rows{logprobs};
  Tensor mask({1, 1}, {1.0});
  Var loss = sequence_loss(g, rows, {{2}}, mask, {}, 0.0);
  CHECK(g.value(loss).data[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("near-perfect predictions leave only the regularizer") {
  Graph g;
  Tensor logits({1, 3});
  logits.at(0, 1) = 60.0;  // overwhelming mass on the target class
  Var lp = g.log_softmax_rows(g.constant(logits));
  std::array rows{lp};
  Tensor mask({1, 1}, {1.0});
  Var theta = g.leaf(Tensor({1}, {2.0}));
  std::array weights{theta};
  Var loss = sequence_loss(g, rows, {{1}}, mask, weights, 0.5);
  // lambda * theta^2 = 0.5 * 4 = 2, data term ~ 0.
  CHECK(g.value(loss).data[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("masked positions cannot move the loss, bit for bit") {
  Rng rng(3);
  Tensor logits_a = random_tensor({2, 5}, rng);
  Tensor logits_b = logits_a;
  // Row 1 is masked at step 0; perturb it arbitrarily.
  logits_b.at(1, 2) = 17.0;
  logits_b.at(1, 0) = -9.0;

  auto loss_of = [&](const Tensor& step0) {
    Graph g;
    Var lp0 = g.log_softmax_rows(g.constant(step0));
    Var lp1 = g.log_softmax_rows(g.constant(logits_a));
    std::array rows{lp0, lp1};
    Tensor mask({2, 2}, {1.0, 1.0, 0.0, 1.0});
    return g.value(sequence_loss(g, rows, {{0, 1}, {2, 3}}, mask, {}, 0.0)).data[0];
  };
  CHECK(loss_of(logits_a) == loss_of(logits_b));
}

TEST_CASE("sequence_loss rejects an all-masked batch") {
  Graph g;
  Var lp = g.log_softmax_rows(g.constant(Tensor::zeros({1, 3})));
  std::array rows{lp};
  Tensor mask({1, 1}, {0.0});
  CHECK_THROWS_AS(sequence_loss(g, rows, {{0}}, mask, {}, 0.0), contract_error);
}

TEST_CASE("global norm clipping") {
  SUBCASE("scales [3,4] to [0.6,0.8] exactly") {
    std::vector<std::pair<std::string, Tensor>> grads;
    grads.emplace_back("g", Tensor({2}, {3.0, 4.0}));
    const double norm = clip_global_norm(grads, 1.0);
    CHECK(norm == 5.0);
    CHECK(grads[0].second.data[0] == 0.6);
    CHECK(grads[0].second.data[1] == 0.8);
  }
  SUBCASE("leaves small gradients alone") {
    std::vector<std::pair<std::string, Tensor>> grads;
    grads.emplace_back("g", Tensor({2}, {0.3, 0.4}));
    clip_global_norm(grads, 1.0);
    CHECK(grads[0].second.data == std::vector<double>{0.3, 0.4});
  }
  SUBCASE("the norm is joint across tensors") {
    std::vector<std::pair<std::string, Tensor>> grads;
    grads.emplace_back("a", Tensor({1}, {3.0}));
    grads.emplace_back("b", Tensor({1}, {4.0}));
    clip_global_norm(grads, 1.0);
    CHECK(grads[0].second.data[0] == 0.6);
    CHECK(grads[1].second.data[0] == 0.8);
  }
  SUBCASE("clipped norm never exceeds the threshold and keeps direction") {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<std::pair<std::string, Tensor>> grads;
      grads.emplace_back("a", random_tensor({3, 3}, rng, -4.0, 4.0));
      grads.emplace_back("b", random_tensor({5}, rng, -4.0, 4.0));
      std::vector<double> before;
      for (const auto& [n, t] : grads) before.insert(before.end(), t.data.begin(), t.data.end());
      const double norm = clip_global_norm(grads, 1.0);
      std::vector<double> after;
      for (const auto& [n, t] : grads) after.insert(after.end(), t.data.begin(), t.data.end());
      double sq = 0.0, dot = 0.0, before_sq = 0.0;
      for (std::size_t i = 0; i < after.size(); ++i) {
        sq += after[i] * after[i];
        dot += after[i] * before[i];
        before_sq += before[i] * before[i];
      }
      if (norm > 1.0) {
        CHECK(std::sqrt(sq) <= 1.0 + 1e-12);
        const double cosine = dot / std::sqrt(sq * before_sq);
        CHECK(std::abs(cosine - 1.0) <= 1e-12);
      }
    }
  }
}

namespace {

// Plain scalar Adam, one variable.
struct ScalarAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double update(double theta, double g, double alpha) {
    t += 1;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double m_hat = m / (1.0 - std::pow(0.9, t));
    const double v_hat = v / (1.0 - std::pow(0.999, t));
    return theta - alpha * m_hat / (std::sqrt(v_hat) + 1e-8);
  }
};

}  // namespace

TEST_CASE("adam") {
  SUBCASE("zero gradients leave parameters untouched") {
    ParamSet p;
    p.add("w", Tensor({2, 2}, {1, 2, 3, 4}));
    AdamState state = AdamState::init(p);
    std::vector<std::pair<std::string, Tensor>> grads;
    grads.emplace_back("w", Tensor::zeros({2, 2}));
    for (int i = 0; i < 3; ++i) adam_step(p, grads, state, 0.001);
    CHECK(p.at("w").data == std::vector<double>{1, 2, 3, 4});
    CHECK(state.step == 3);
  }
  SUBCASE("first step magnitude matches the closed form") {
    ParamSet p;
    p.add("w", Tensor({1}, {0.5}));
    AdamState state = AdamState::init(p);
    std::vector<std::pair<std::string, Tensor>> grads;
    grads.emplace_back("w", Tensor({1}, {0.1}));
    adam_step(p, grads, state, 0.001);
    const double delta = p.at("w").data[0] - 0.5;
    CHECK(std::abs(delta + 0.001) < 1e-5);
  }
  SUBCASE("trajectory matches the scalar reimplementation elementwise") {
    Rng rng(7);
    ParamSet p;
    p.add("w", random_tensor({2, 3}, rng));
    p.add("b", random_tensor({4}, rng), ParamSet::Kind::kBias);
    AdamState state = AdamState::init(p);
    Tensor gw = random_tensor({2, 3}, rng);
    Tensor gb = random_tensor({4}, rng);

    std::vector<double> expect_w = p.at("w").data;
    std::vector<double> expect_b = p.at("b").data;
    std::vector<ScalarAdam> sw(expect_w.size()), sb(expect_b.size());

    for (int step = 0; step < 2; ++step) {
      std::vector<std::pair<std::string, Tensor>> grads;
      grads.emplace_back("w", gw);
      grads.emplace_back("b", gb);
      adam_step(p, grads, state, 0.01);
      for (std::size_t i = 0; i < expect_w.size(); ++i) {
        expect_w[i] = sw[i].update(expect_w[i], gw.data[i], 0.01);
      }
      for (std::size_t i = 0; i < expect_b.size(); ++i) {
        expect_b[i] = sb[i].update(expect_b[i], gb.data[i], 0.01);
      }
    }
    for (std::size_t i = 0; i < expect_w.size(); ++i) {
      CHECK(std::abs(p.at("w").data[i] - expect_w[i]) <= 1e-12);
    }
    for (std::size_t i = 0; i < expect_b.size(); ++i) {
      CHECK(std::abs(p.at("b").data[i] - expect_b[i]) <= 1e-12);
    }
  }
}

TEST_CASE("one small step decreases the loss on the same batch") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    Model m = tiny_model(Variant::kChar, seed);
    Corpus corpus = tiny_corpus(m);
    Batch batch = make_batch(corpus, std::array{0, 1, 2, 3});

    const double before = batch_loss_value(m, batch, 1e-6);

    Graph g;
    BoundParams bound = bind_params(g, m.params);
    ModelVars mv = bind_model(g, m, bound);
    std::vector<Var> weights = weight_vars(m, bound);
    BatchLoss bl = batch_loss(g, batch, mv, weights, 1e-6);
    Gradients grads = backward(g, bl.loss);
    auto named = param_grads(g, bound, grads);
    clip_global_norm(named, 1.0);
    AdamState adam = AdamState::init(m.params);
    adam_step(m.params, named, adam, 1e-4);

    const double after = batch_loss_value(m, batch, 1e-6);
    CHECK(after < before);
  }
}

TEST_CASE("the batched loss passes gradient checking with padding in play") {
  for (Variant v : {Variant::kChar, Variant::kChar2Word}) {
    Model m = make_model(v, U"abcde ", U"xyz", 2, 3, 2, 41);
    RawCorpus raw;
    raw.src = {U"ab c", U"d"};
    raw.trg = {U"xy", U"zzz"};
    Corpus corpus = make_corpus(raw, m.src_vocab, m.trg_vocab);
    Batch batch = make_batch(corpus, std::array{0, 1});
    double err = grad_check(
        [&](Graph& g, const BoundParams& bound) {
          ModelVars mv = bind_model(g, m, bound);
          std::vector<Var> weights = weight_vars(m, bound);
          return batch_loss(g, batch, mv, weights, 1e-3).loss;
        },
        m.params, 1e-5);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("an epoch covers the corpus exactly once") {
  Model m = tiny_model(Variant::kChar2Word, 11);
  Corpus corpus = tiny_corpus(m);
  TrainConfig cfg;
  cfg.variant = Variant::kChar2Word;
  cfg.embed_size = 3;
  cfg.hidden_size = 4;
  cfg.attn_size = 3;
  cfg.batch_budget = 12;
  AdamState adam = AdamState::init(m.params);
  Rng rng(9);
  std::multiset<int> seen;
  EpochMetrics metrics = train_epoch(corpus, m, adam, cfg, rng, [&](const Batch& b, double) {
    seen.insert(b.sample_ids.begin(), b.sample_ids.end());
  });
  CHECK(metrics.samples == 4);
  CHECK(seen == std::multiset<int>{0, 1, 2, 3});
  CHECK(metrics.batches >= 2);
  CHECK(std::isfinite(metrics.mean_loss));
}

TEST_CASE("fixed seeds give bit-identical loss trajectories") {
  auto run = [] {
    Model m = tiny_model(Variant::kChar, 13);
    Corpus corpus = tiny_corpus(m);
    TrainConfig cfg;
    cfg.embed_size = 3;
    cfg.hidden_size = 4;
    cfg.attn_size = 3;
    cfg.batch_budget = 14;
    AdamState adam = AdamState::init(m.params);
    std::vector<double> losses;
    for (int epoch = 0; epoch < 3; ++epoch) {
      Rng rng(Rng::derive(13, static_cast<std::uint64_t>(epoch)));
      train_epoch(corpus, m, adam, cfg, rng,
                  [&](const Batch&, double loss) { losses.push_back(loss); });
    }
    return losses;
  };
  CHECK(run() == run());
}

TEST_CASE("non-finite loss aborts with batch diagnostics") {
  Model m = tiny_model(Variant::kChar, 17);
  m.params.at("out.b").at(0) = std::numeric_limits<double>::quiet_NaN();
  Corpus corpus = tiny_corpus(m);
  TrainConfig cfg;
  cfg.embed_size = 3;
  cfg.hidden_size = 4;
  cfg.attn_size = 3;
  AdamState adam = AdamState::init(m.params);
  Rng rng(1);
  CHECK_THROWS_WITH_AS(train_epoch(corpus, m, adam, cfg, rng), doctest::Contains("batch"),
                       numeric_error);
}

TEST_SUITE_END();
