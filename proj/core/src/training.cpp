#include "charnmt/training.hpp"

#include <chrono>
#include <cmath>

#include "charnmt/errors.hpp"

namespace charnmt {

void TrainConfig::validate() const {
  if (learning_rate <= 0 || l2_lambda < 0 || clip_threshold <= 0 || batch_budget <= 0 ||
      max_epochs <= 0 || embed_size <= 0 || hidden_size <= 0 || attn_size <= 0) {
    throw config_error("train config: all sizes and rates must be positive");
  }
}

Var sequence_loss(Graph& g, std::span<const Var> logprob_rows,
                  const std::vector<std::vector<int>>& targets_by_time, const Tensor& target_mask,
                  std::span<const Var> l2_weights, double lambda) {
  if (logprob_rows.size() != targets_by_time.size() ||
      static_cast<std::int64_t>(logprob_rows.size()) != target_mask.shape[1]) {
    throw dim_error("sequence_loss: rows, targets and mask lengths differ");
  }
  std::int64_t unmasked = 0;
  for (double m : target_mask.data) unmasked += m != 0.0 ? 1 : 0;
  if (unmasked == 0) throw contract_error("sequence_loss: no unmasked target positions");

  Var total;
  for (std::size_t t = 0; t < logprob_rows.size(); ++t) {
    Var picked = g.pick_cols(logprob_rows[t], targets_by_time[t]);
    Tensor mask_col({target_mask.shape[0]});
    for (std::int64_t row = 0; row < target_mask.shape[0]; ++row) {
      mask_col.at(row) = target_mask.at(row, static_cast<std::int64_t>(t));
    }
    Var masked = g.mul(picked, g.constant(std::move(mask_col)));
    Var step_sum = g.reduce_sum(masked);
    total = t == 0 ? step_sum : g.add(total, step_sum);
  }
  Var loss = g.scale(total, -1.0 / static_cast<double>(unmasked));

  if (lambda != 0.0 && !l2_weights.empty()) {
    Var reg;
    for (std::size_t i = 0; i < l2_weights.size(); ++i) {
      Var sq = g.reduce_sum(g.mul(l2_weights[i], l2_weights[i]));
      reg = i == 0 ? sq : g.add(reg, sq);
    }
    loss = g.add(loss, g.scale(reg, lambda));
  }
  return loss;
}

double clip_global_norm(std::vector<std::pair<std::string, Tensor>>& grads, double threshold) {
  if (threshold <= 0) throw contract_error("clip_global_norm: threshold must be positive");
  double sq = 0.0;
  for (const auto& [name, t] : grads) {
    for (double x : t.data) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > threshold) {
    for (auto& [name, t] : grads) {
      for (double& x : t.data) x = x * threshold / norm;
    }
  }
  return norm;
}

AdamState AdamState::init(const ParamSet& params) {
  AdamState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& name : params.names()) {
    s.m.push_back(Tensor::zeros(params.at(name).shape));
    s.v.push_back(Tensor::zeros(params.at(name).shape));
  }
  return s;
}

void adam_step(ParamSet& params, const std::vector<std::pair<std::string, Tensor>>& grads,
               AdamState& state, double alpha) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw contract_error("adam_step: gradient/state sizes do not match the parameters");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < grads.size(); ++p) {
    const std::string& name = grads[p].first;
    if (name != params.names()[p]) {
      throw contract_error("adam_step: gradients out of order at " + name);
    }
    Tensor& theta = params.at(name);
    const Tensor& grad = grads[p].second;
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < theta.data.size(); ++i) {
      const double gi = grad.data[i];
      m.data[i] = kBeta1 * m.data[i] + (1.0 - kBeta1) * gi;
      v.data[i] = kBeta2 * v.data[i] + (1.0 - kBeta2) * gi * gi;
      const double m_hat = m.data[i] / bc1;
      const double v_hat = v.data[i] / bc2;
      theta.data[i] -= alpha * m_hat / (std::sqrt(v_hat) + kEps);
    }
  }
}

BatchLoss batch_loss(Graph& g, const Batch& batch, const ModelVars& mv,
                     std::span<const Var> l2_weights, double lambda) {
  BatchedEncoding enc = encode_batch(g, batch, mv);
  std::vector<Var> logprobs = decode_teacher_forced(g, batch, enc, mv);
  std::vector<std::vector<int>> targets(static_cast<std::size_t>(batch.trg_len));
  for (std::int64_t t = 0; t < batch.trg_len; ++t) {
    targets[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(batch.batch_size));
    for (std::int64_t row = 0; row < batch.batch_size; ++row) {
      targets[static_cast<std::size_t>(t)][static_cast<std::size_t>(row)] = batch.trg_at(row, t);
    }
  }
  BatchLoss out;
  out.loss = sequence_loss(g, logprobs, targets, batch.trg_mask, l2_weights, lambda);
  for (double m : batch.trg_mask.data) out.target_tokens += m != 0.0 ? 1 : 0;
  return out;
}

EpochMetrics train_epoch(const Corpus& corpus, Model& model, AdamState& adam,
                         const TrainConfig& config, Rng& rng, const BatchObserver& on_batch) {
  if (corpus.pairs.empty()) throw contract_error("train_epoch: empty corpus");
  config.validate();

  const auto start = std::chrono::steady_clock::now();
  std::vector<Batch> batches = make_epoch_batches(corpus, config.batch_budget, rng);

  EpochMetrics metrics;
  double loss_weighted = 0.0;
  std::int64_t tokens = 0, chars = 0;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const Batch& batch = batches[b];
    Graph g;
    BoundParams bound = bind_params(g, model.params);
    ModelVars mv = bind_model(g, model, bound);
    std::vector<Var> weights = weight_vars(model, bound);
    BatchLoss bl = batch_loss(g, batch, mv, weights, config.l2_lambda);
    const double loss = g.value(bl.loss).data[0];
    if (!std::isfinite(loss)) {
      throw numeric_error("train_epoch: non-finite loss " + std::to_string(loss) + " in batch " +
                          std::to_string(b) + " of " + std::to_string(batches.size()));
    }

    Gradients grads = backward(g, bl.loss);
    auto named = param_grads(g, bound, grads);
    clip_global_norm(named, config.clip_threshold);
    adam_step(model.params, named, adam, config.learning_rate);

    loss_weighted += loss * static_cast<double>(bl.target_tokens);
    tokens += bl.target_tokens;
    chars += batch.real_chars();
    metrics.samples += batch.batch_size;
    if (on_batch) on_batch(batch, loss);
  }
  metrics.batches = static_cast<int>(batches.size());
  metrics.mean_loss = tokens > 0 ? loss_weighted / static_cast<double>(tokens) : 0.0;
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  metrics.tokens_per_sec = seconds > 0 ? static_cast<double>(chars) / seconds : 0.0;
  return metrics;
}

}  // namespace charnmt
