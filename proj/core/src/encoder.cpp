#include "charnmt/encoder.hpp"

#include <algorithm>

#include "charnmt/errors.hpp"

namespace charnmt {

namespace {

Var embed_one(Graph& g, Var table, int id) {
  const std::int64_t m = g.value(table).shape[0];
  return g.reshape(g.gather_cols(table, {id}), {m});
}

EncoderOutput finish_encoder_output(Graph& g, std::vector<Var>& annotation_rows,
                                    std::vector<int> positions, const ModelVars& mv) {
  EncoderOutput out;
  out.last_annotation = annotation_rows.back();
  out.annotations = g.stack_rows(annotation_rows);
  out.keys = g.matmul_nt(out.annotations, mv.attn.u);
  out.positions = std::move(positions);
  out.mask.assign(out.positions.size(), 1.0);
  return out;
}

}  // namespace

EncoderOutput encode_char(Graph& g, std::span<const int> src_ids, const ModelVars& mv) {
  if (src_ids.empty()) throw contract_error("encode_char: empty input");
  const std::int64_t t_x = static_cast<std::int64_t>(src_ids.size());
  const std::int64_t m = mv.model->config.hidden_size;

  std::vector<Var> embedded(static_cast<std::size_t>(t_x));
  for (std::int64_t t = 0; t < t_x; ++t) {
    embedded[static_cast<std::size_t>(t)] = embed_one(g, mv.src_embed, src_ids[static_cast<std::size_t>(t)]);
  }

  std::vector<Var> fwd(static_cast<std::size_t>(t_x)), bwd(static_cast<std::size_t>(t_x));
  Var h = g.constant(Tensor::zeros({m}));
  for (std::int64_t t = 0; t < t_x; ++t) {
    h = gru_step(g, embedded[static_cast<std::size_t>(t)], h, mv.enc_fwd);
    fwd[static_cast<std::size_t>(t)] = h;
  }
  h = g.constant(Tensor::zeros({m}));
  for (std::int64_t t = t_x - 1; t >= 0; --t) {
    h = gru_step(g, embedded[static_cast<std::size_t>(t)], h, mv.enc_bwd);
    bwd[static_cast<std::size_t>(t)] = h;
  }

  std::vector<Var> rows(static_cast<std::size_t>(t_x));
  std::vector<int> positions(static_cast<std::size_t>(t_x));
  for (std::int64_t t = 0; t < t_x; ++t) {
    rows[static_cast<std::size_t>(t)] =
        g.concat_cols(fwd[static_cast<std::size_t>(t)], bwd[static_cast<std::size_t>(t)]);
    positions[static_cast<std::size_t>(t)] = static_cast<int>(t);
  }
  return finish_encoder_output(g, rows, std::move(positions), mv);
}

std::vector<int> word_boundaries(std::span<const int> src_ids, int space_id) {
  if (src_ids.empty()) throw contract_error("word_boundaries: empty input");
  std::vector<int> phi;
  for (std::size_t t = 1; t < src_ids.size(); ++t) {
    if (src_ids[t] == space_id && src_ids[t - 1] != space_id) {
      phi.push_back(static_cast<int>(t));
    }
  }
  const int last = static_cast<int>(src_ids.size()) - 1;
  if (phi.empty() || phi.back() != last) phi.push_back(last);
  return phi;
}

EncoderOutput encode_char2word(Graph& g, std::span<const int> src_ids, const ModelVars& mv) {
  if (src_ids.empty()) throw contract_error("encode_char2word: empty input");
  const std::int64_t m = mv.model->config.hidden_size;
  const std::vector<int> phi = word_boundaries(src_ids, mv.model->space_id());

  // Forward character pass; keep every state so boundary states can be
  // sampled from it.
  std::vector<Var> char_states(src_ids.size());
  Var h = g.constant(Tensor::zeros({m}));
  for (std::size_t t = 0; t < src_ids.size(); ++t) {
    h = gru_step(g, embed_one(g, mv.src_embed, src_ids[t]), h, mv.enc_fwd);
    char_states[t] = h;
  }

  std::vector<Var> sampled(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    sampled[k] = char_states[static_cast<std::size_t>(phi[k])];
  }

  const std::int64_t t_w = static_cast<std::int64_t>(phi.size());
  std::vector<Var> fwd(static_cast<std::size_t>(t_w)), bwd(static_cast<std::size_t>(t_w));
  h = g.constant(Tensor::zeros({m}));
  for (std::int64_t k = 0; k < t_w; ++k) {
    h = gru_step(g, sampled[static_cast<std::size_t>(k)], h, mv.word_fwd);
    fwd[static_cast<std::size_t>(k)] = h;
  }
  h = g.constant(Tensor::zeros({m}));
  for (std::int64_t k = t_w - 1; k >= 0; --k) {
    h = gru_step(g, sampled[static_cast<std::size_t>(k)], h, mv.word_bwd);
    bwd[static_cast<std::size_t>(k)] = h;
  }

  std::vector<Var> rows(static_cast<std::size_t>(t_w));
  for (std::int64_t k = 0; k < t_w; ++k) {
    rows[static_cast<std::size_t>(k)] =
        g.concat_cols(fwd[static_cast<std::size_t>(k)], bwd[static_cast<std::size_t>(k)]);
  }
  return finish_encoder_output(g, rows, phi, mv);
}

EncoderOutput encode_source(Graph& g, std::span<const int> src_ids, const ModelVars& mv) {
  return mv.model->config.variant == Variant::kChar ? encode_char(g, src_ids, mv)
                                                    : encode_char2word(g, src_ids, mv);
}

namespace {

// h <- h + mask.(h_new - h): rows with mask 0 keep their state.
Var gated_step(Graph& g, Var x, Var h, Var mask_col, const GruVars& gru) {
  Var h_new = gru_step(g, x, h, gru);
  return g.add(h, g.scale_rows(g.sub(h_new, h), mask_col));
}

std::vector<int> batch_column(const std::vector<int>& ids, std::int64_t rows, std::int64_t cols,
                              std::int64_t t) {
  std::vector<int> col(static_cast<std::size_t>(rows));
  for (std::int64_t row = 0; row < rows; ++row) {
    col[static_cast<std::size_t>(row)] = ids[static_cast<std::size_t>(row * cols + t)];
  }
  return col;
}

Tensor mask_column(const Tensor& mask, std::int64_t t) {
  Tensor col({mask.shape[0]});
  for (std::int64_t row = 0; row < mask.shape[0]; ++row) col.at(row) = mask.at(row, t);
  return col;
}

std::vector<std::int64_t> row_lengths(const Tensor& mask) {
  std::vector<std::int64_t> lens(static_cast<std::size_t>(mask.shape[0]), 0);
  for (std::int64_t row = 0; row < mask.shape[0]; ++row) {
    for (std::int64_t t = 0; t < mask.shape[1]; ++t) {
      if (mask.at(row, t) != 0.0) lens[static_cast<std::size_t>(row)] = t + 1;
    }
  }
  return lens;
}

struct BiStates {
  std::vector<Var> fwd;
  std::vector<Var> bwd;
};

// Mask-gated bi-directional pass over pre-built per-step inputs.
BiStates bi_gru(Graph& g, std::span<const Var> inputs, std::span<const Var> mask_cols,
                const GruVars& fwd_gru, const GruVars& bwd_gru, std::int64_t m) {
  const std::size_t t_len = inputs.size();
  BiStates s;
  s.fwd.resize(t_len);
  s.bwd.resize(t_len);
  const std::int64_t rows = g.value(inputs[0]).shape[0];
  Var h = g.constant(Tensor::zeros({rows, m}));
  for (std::size_t t = 0; t < t_len; ++t) {
    h = gated_step(g, inputs[t], h, mask_cols[t], fwd_gru);
    s.fwd[t] = h;
  }
  h = g.constant(Tensor::zeros({rows, m}));
  for (std::size_t t = t_len; t-- > 0;) {
    h = gated_step(g, inputs[t], h, mask_cols[t], bwd_gru);
    s.bwd[t] = h;
  }
  return s;
}

BatchedEncoding finish_batched(Graph& g, const BiStates& states, const Tensor& attn_mask,
                               const std::vector<std::int64_t>& lengths, const ModelVars& mv) {
  BatchedEncoding enc;
  const std::size_t t_len = states.fwd.size();
  enc.annotations.resize(t_len);
  enc.keys.resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    enc.annotations[t] = g.concat_cols(states.fwd[t], states.bwd[t]);
    enc.keys[t] = g.matmul_nt(enc.annotations[t], mv.attn.u);
  }
  std::vector<int> last_idx(lengths.size());
  for (std::size_t row = 0; row < lengths.size(); ++row) {
    last_idx[row] = static_cast<int>(lengths[row] - 1);
  }
  enc.last_annotation = g.time_select(enc.annotations, std::move(last_idx));
  enc.attn_mask = g.constant(attn_mask);
  return enc;
}

BatchedEncoding encode_batch_char(Graph& g, const Batch& batch, const ModelVars& mv) {
  std::vector<Var> inputs(static_cast<std::size_t>(batch.src_len));
  std::vector<Var> mask_cols(static_cast<std::size_t>(batch.src_len));
  for (std::int64_t t = 0; t < batch.src_len; ++t) {
    inputs[static_cast<std::size_t>(t)] =
        g.gather_cols(mv.src_embed, batch_column(batch.src_ids, batch.batch_size, batch.src_len, t));
    mask_cols[static_cast<std::size_t>(t)] = g.constant(mask_column(batch.src_mask, t));
  }
  BiStates states = bi_gru(g, inputs, mask_cols, mv.enc_fwd, mv.enc_bwd, mv.model->config.hidden_size);
  return finish_batched(g, states, batch.src_mask, row_lengths(batch.src_mask), mv);
}

BatchedEncoding encode_batch_char2word(Graph& g, const Batch& batch, const ModelVars& mv) {
  const std::int64_t m = mv.model->config.hidden_size;
  const int space = mv.model->space_id();
  const std::vector<std::int64_t> src_lens = row_lengths(batch.src_mask);

  // Forward character pass with gating.
  std::vector<Var> char_states(static_cast<std::size_t>(batch.src_len));
  Var h = g.constant(Tensor::zeros({batch.batch_size, m}));
  for (std::int64_t t = 0; t < batch.src_len; ++t) {
    Var x = g.gather_cols(mv.src_embed,
                          batch_column(batch.src_ids, batch.batch_size, batch.src_len, t));
    h = gated_step(g, x, h, g.constant(mask_column(batch.src_mask, t)), mv.enc_fwd);
    char_states[static_cast<std::size_t>(t)] = h;
  }

  // Per-row boundaries over the real prefix.
  std::vector<std::vector<int>> phis(static_cast<std::size_t>(batch.batch_size));
  std::int64_t t_w = 0;
  for (std::int64_t row = 0; row < batch.batch_size; ++row) {
    const auto len = static_cast<std::size_t>(src_lens[static_cast<std::size_t>(row)]);
    std::vector<int> ids(batch.src_ids.begin() + row * batch.src_len,
                         batch.src_ids.begin() + row * batch.src_len + static_cast<std::int64_t>(len));
    phis[static_cast<std::size_t>(row)] = word_boundaries(ids, space);
    t_w = std::max(t_w, static_cast<std::int64_t>(phis[static_cast<std::size_t>(row)].size()));
  }

  Tensor word_mask = Tensor::zeros({batch.batch_size, t_w});
  std::vector<std::int64_t> word_lens(static_cast<std::size_t>(batch.batch_size));
  std::vector<Var> sampled(static_cast<std::size_t>(t_w));
  std::vector<Var> mask_cols(static_cast<std::size_t>(t_w));
  for (std::int64_t k = 0; k < t_w; ++k) {
    std::vector<int> idx(static_cast<std::size_t>(batch.batch_size));
    for (std::int64_t row = 0; row < batch.batch_size; ++row) {
      const auto& phi = phis[static_cast<std::size_t>(row)];
      const bool real = k < static_cast<std::int64_t>(phi.size());
      // Padded word slots re-read the row's last boundary; the gate and the
      // attention mask keep them inert.
      idx[static_cast<std::size_t>(row)] = real ? phi[static_cast<std::size_t>(k)] : phi.back();
      if (real) word_mask.at(row, k) = 1.0;
    }
    sampled[static_cast<std::size_t>(k)] = g.time_select(char_states, std::move(idx));
    mask_cols[static_cast<std::size_t>(k)] = g.constant(mask_column(word_mask, k));
  }
  for (std::int64_t row = 0; row < batch.batch_size; ++row) {
    word_lens[static_cast<std::size_t>(row)] =
        static_cast<std::int64_t>(phis[static_cast<std::size_t>(row)].size());
  }

  BiStates states = bi_gru(g, sampled, mask_cols, mv.word_fwd, mv.word_bwd, m);
  return finish_batched(g, states, word_mask, word_lens, mv);
}

}  // namespace

BatchedEncoding encode_batch(Graph& g, const Batch& batch, const ModelVars& mv) {
  if (batch.batch_size <= 0) throw contract_error("encode_batch: empty batch");
  return mv.model->config.variant == Variant::kChar ? encode_batch_char(g, batch, mv)
                                                    : encode_batch_char2word(g, batch, mv);
}

}  // namespace charnmt
