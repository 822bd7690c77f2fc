#pragma once

#include <span>
#include <vector>

#include "charnmt/autodiff.hpp"
#include "charnmt/data.hpp"
#include "charnmt/model.hpp"

namespace charnmt {

// Annotations over one source sentence plus the precomputed attention keys
// U_a h_j. For the char encoder there is one row per character; for
// char2word one row per word boundary.
struct EncoderOutput {
  Var annotations;              // (T, annotation_size)
  Var keys;                     // (T, attn_size)
  Var last_annotation;          // rank-1, the final row of annotations
  std::vector<int> positions;   // row -> source character index
  std::vector<double> mask;     // 1.0 = real position (all ones here)

  std::int64_t size() const { return static_cast<std::int64_t>(positions.size()); }
};

// Bi-directional character encoder; one annotation per character,
// h_t = [forward state at t ; backward state at t], initial states zero.
EncoderOutput encode_char(Graph& g, std::span<const int> src_ids, const ModelVars& mv);

// Indices where a word ends: every space preceded by a non-space, plus the
// final index so the last word is represented. Runs of spaces collapse.
std::vector<int> word_boundaries(std::span<const int> src_ids, int space_id);

// Hierarchical encoder: forward character GRU, states sampled at word
// boundaries, then a bi-directional GRU over the sampled sequence.
EncoderOutput encode_char2word(Graph& g, std::span<const int> src_ids, const ModelVars& mv);

// Dispatch on the model variant.
EncoderOutput encode_source(Graph& g, std::span<const int> src_ids, const ModelVars& mv);

// Batched equivalent for training. Annotations are kept time-major, one
// (batch x annotation_size) matrix per attended position. State updates at
// padded steps are gated to identity so padding never leaks into real
// positions.
struct BatchedEncoding {
  std::vector<Var> annotations;  // per position: (B, annotation_size)
  std::vector<Var> keys;         // per position: (B, attn_size)
  Var last_annotation;           // (B, annotation_size) at each row's final real position
  Var attn_mask;                 // constant (B, T) 0/1
};

BatchedEncoding encode_batch(Graph& g, const Batch& batch, const ModelVars& mv);

}  // namespace charnmt
