#include "charnmt/decoder.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <ostream>

#include "charnmt/errors.hpp"

namespace charnmt {

void AttentionTrace::write(std::ostream& os) const {
  for (std::size_t j = 0; j < source_labels.size(); ++j) {
    if (j) os << '\t';
    os << source_labels[j];
  }
  os << '\n';
  std::array<char, 32> buf{};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << (i < output_labels.size() ? output_labels[i] : std::string());
    for (double w : rows[i]) {
      std::snprintf(buf.data(), buf.size(), "%.9g", w);
      os << '\t' << buf.data();
    }
    os << '\n';
  }
}

AttendResult attend(Graph& g, Var s_prev, const EncoderOutput& enc, const AttnVars& attn) {
  if (enc.size() == 0) throw contract_error("attend: empty encoder output");
  Var query = g.add(g.matmul_nt(s_prev, attn.w), attn.b);     // (attn)
  Var scores_in = g.tanh(g.add_rows(enc.keys, query));        // (T, attn)
  Var scores = g.matmul(scores_in, attn.v);                   // (T)
  Var weights = g.softmax_rows(scores);
  Var context = g.matmul(weights, enc.annotations);           // (annotation_size)
  return {weights, context};
}

Var init_state(Graph& g, const EncoderOutput& enc, const ModelVars& mv) {
  if (enc.size() == 0) throw contract_error("init_state: empty encoder output");
  return g.tanh(g.add(g.matmul_nt(enc.last_annotation, mv.init_w), mv.init_b));
}

StepResult decode_step(Graph& g, Var s_prev, int prev_id, const EncoderOutput& enc,
                       const ModelVars& mv) {
  if (prev_id < 0 || prev_id >= mv.model->trg_vocab.size()) {
    throw vocab_error("decode_step: previous id " + std::to_string(prev_id) +
                      " outside the target vocabulary");
  }
  AttendResult att = attend(g, s_prev, enc, mv.attn);
  const std::int64_t m_e = mv.model->config.embed_size;
  Var prev_embed = g.reshape(g.gather_cols(mv.trg_embed, {prev_id}), {m_e});
  Var x = g.concat_cols(prev_embed, att.context);
  Var state = gru_step(g, x, s_prev, mv.dec);
  Var probs = project_softmax(g, state, mv.out);
  return {state, probs, att.weights};
}

namespace {

int argmax(const Tensor& t) {
  return static_cast<int>(std::max_element(t.data.begin(), t.data.end()) - t.data.begin());
}

}  // namespace

GreedyResult greedy_decode(Graph& g, const EncoderOutput& enc, const ModelVars& mv, int max_len) {
  if (max_len < 1) throw contract_error("greedy_decode: max_len must be at least 1");
  GreedyResult out;
  Var s = init_state(g, enc, mv);
  int prev = Vocabulary::kBos;
  for (int t = 0; t < max_len; ++t) {
    StepResult step = decode_step(g, s, prev, enc, mv);
    const int next = argmax(g.value(step.probs));
    out.ids.push_back(next);
    out.trace.rows.push_back(g.value(step.weights).data);
    if (next == Vocabulary::kEos) return out;
    s = step.state;
    prev = next;
  }
  out.truncated = true;
  return out;
}

BatchedAttend attend_batch(Graph& g, Var s_prev, const BatchedEncoding& enc, const AttnVars& attn) {
  if (enc.annotations.empty()) throw contract_error("attend_batch: empty encoder output");
  Var query = g.add_rows(g.matmul_nt(s_prev, attn.w), attn.b);  // (B, attn)
  std::vector<Var> score_cols(enc.annotations.size());
  for (std::size_t j = 0; j < enc.annotations.size(); ++j) {
    Var u = g.tanh(g.add(enc.keys[j], query));
    score_cols[j] = g.matmul(u, attn.v);  // (B)
  }
  Var scores = g.stack_cols(score_cols);                 // (B, T)
  Var weights = g.softmax_rows(scores, enc.attn_mask);   // masked positions: exactly 0
  Var context;
  for (std::size_t j = 0; j < enc.annotations.size(); ++j) {
    Var term = g.scale_rows(enc.annotations[j], g.select_col(weights, static_cast<std::int64_t>(j)));
    context = j == 0 ? term : g.add(context, term);
  }
  return {weights, context};
}

Var init_state_batch(Graph& g, const BatchedEncoding& enc, const ModelVars& mv) {
  return g.tanh(g.add_rows(g.matmul_nt(enc.last_annotation, mv.init_w), mv.init_b));
}

std::vector<Var> decode_teacher_forced(Graph& g, const Batch& batch, const BatchedEncoding& enc,
                                       const ModelVars& mv) {
  std::vector<Var> logprob_rows(static_cast<std::size_t>(batch.trg_len));
  Var s = init_state_batch(g, enc, mv);
  for (std::int64_t t = 0; t < batch.trg_len; ++t) {
    std::vector<int> prev(static_cast<std::size_t>(batch.batch_size));
    for (std::int64_t row = 0; row < batch.batch_size; ++row) {
      prev[static_cast<std::size_t>(row)] =
          t == 0 ? Vocabulary::kBos : batch.trg_at(row, t - 1);
    }
    BatchedAttend att = attend_batch(g, s, enc, mv.attn);
    Var x = g.concat_cols(g.gather_cols(mv.trg_embed, prev), att.context);
    s = gru_step(g, x, s, mv.dec);
    logprob_rows[static_cast<std::size_t>(t)] = project_log_softmax(g, s, mv.out);
  }
  return logprob_rows;
}

}  // namespace charnmt
