#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "charnmt/encoder.hpp"
#include "charnmt/model.hpp"

namespace charnmt {

struct DecoderState {
  Var s;
  int step = 0;
};

// T_y x T rows of attention weights recorded during one decode, one row per
// emitted symbol.
struct AttentionTrace {
  std::vector<std::string> source_labels;
  std::vector<std::string> output_labels;
  std::vector<std::vector<double>> rows;

  // UTF-8 text: first line the tab-separated source labels, then per
  // emitted symbol its label, a tab, and the weights with 9 significant
  // digits, tab separated.
  void write(std::ostream& os) const;
};

struct AttendResult {
  Var weights;  // rank-1 (T)
  Var context;  // rank-1 (annotation_size)
};

// Additive attention over one sentence, scored from the precomputed keys:
// e_j = v . tanh(W s_prev + U h_j + b), weights = softmax(e), context the
// weighted sum of annotations.
AttendResult attend(Graph& g, Var s_prev, const EncoderOutput& enc, const AttnVars& attn);

// s_0 = tanh(W_init h_last + b_init) from the final annotation row.
Var init_state(Graph& g, const EncoderOutput& enc, const ModelVars& mv);

struct StepResult {
  Var state;
  Var probs;    // rank-1 over the target vocabulary
  Var weights;  // rank-1 attention row
};

// One decode step: attend, feed [E' prev ; context] to the GRU, project.
StepResult decode_step(Graph& g, Var s_prev, int prev_id, const EncoderOutput& enc,
                       const ModelVars& mv);

struct GreedyResult {
  std::vector<int> ids;  // includes the terminating eos when one was produced
  AttentionTrace trace;  // labels left empty; weights row per emitted symbol
  bool truncated = false;
};

// Argmax feedback from bos until eos or max_len.
GreedyResult greedy_decode(Graph& g, const EncoderOutput& enc, const ModelVars& mv, int max_len);

// Batched attention for training; masked positions get weight exactly 0.
struct BatchedAttend {
  Var weights;  // (B, T)
  Var context;  // (B, annotation_size)
};
BatchedAttend attend_batch(Graph& g, Var s_prev, const BatchedEncoding& enc, const AttnVars& attn);

Var init_state_batch(Graph& g, const BatchedEncoding& enc, const ModelVars& mv);

// Teacher-forced decode over a batch; returns one (B, K) log-probability
// matrix per target position.
std::vector<Var> decode_teacher_forced(Graph& g, const Batch& batch, const BatchedEncoding& enc,
                                       const ModelVars& mv);

}  // namespace charnmt
