#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "charnmt/data.hpp"
#include "charnmt/decoder.hpp"
#include "charnmt/encoder.hpp"
#include "charnmt/model.hpp"

namespace charnmt {

struct TrainConfig {
  double learning_rate = 0.001;
  double l2_lambda = 1e-6;
  double clip_threshold = 1.0;
  std::int64_t batch_budget = 50000;
  int max_epochs = 10;
  std::uint64_t seed = 1;
  Variant variant = Variant::kChar;
  std::int64_t embed_size = 256;
  std::int64_t hidden_size = 400;
  std::int64_t attn_size = 300;

  void validate() const;
};

// Cross entropy over the unmasked target positions, averaged per position,
// plus lambda times the squared non-bias weights. logprob_rows[t] is
// (B, K); targets_by_time[t] holds the B target ids at step t.
Var sequence_loss(Graph& g, std::span<const Var> logprob_rows,
                  const std::vector<std::vector<int>>& targets_by_time, const Tensor& target_mask,
                  std::span<const Var> l2_weights, double lambda);

// Joint L2 norm over all gradients. Scales every tensor by threshold/norm
// when the norm exceeds the threshold; returns the pre-clip norm.
double clip_global_norm(std::vector<std::pair<std::string, Tensor>>& grads, double threshold);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;

  static AdamState init(const ParamSet& params);
};

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction).
// grads must be in ParamSet order.
void adam_step(ParamSet& params, const std::vector<std::pair<std::string, Tensor>>& grads,
               AdamState& state, double alpha);

// Full training forward for one batch: encode, teacher-forced decode,
// sequence loss.
struct BatchLoss {
  Var loss;
  std::int64_t target_tokens = 0;
};
BatchLoss batch_loss(Graph& g, const Batch& batch, const ModelVars& mv,
                     std::span<const Var> l2_weights, double lambda);

struct EpochMetrics {
  double mean_loss = 0.0;       // token-weighted over batches
  double tokens_per_sec = 0.0;  // real source+target characters per second
  int batches = 0;
  std::int64_t samples = 0;
};

using BatchObserver = std::function<void(const Batch&, double loss)>;

// One pass over the corpus: batch, forward/backward, clip, Adam update.
// Aborts with diagnostics if a batch loss goes non-finite.
EpochMetrics train_epoch(const Corpus& corpus, Model& model, AdamState& adam,
                         const TrainConfig& config, Rng& rng,
                         const BatchObserver& on_batch = {});

}  // namespace charnmt
