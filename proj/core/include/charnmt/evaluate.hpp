#pragma once

#include <span>
#include <string>
#include <vector>

#include "charnmt/bleu.hpp"
#include "charnmt/model.hpp"

namespace charnmt {

struct TranslationResult {
  std::u32string text;
  std::vector<int> ids;                            // includes eos when produced
  std::vector<std::vector<double>> attention_rows; // one row per emitted symbol
  std::vector<int> positions;                      // source char index per attended column
  bool truncated = false;
};

// Greedy-decodes one source sentence with a fresh graph.
TranslationResult translate_sentence(const Model& model, const std::u32string& source, int max_len);

struct EvalResult {
  BleuResult bleu;
  std::vector<std::string> hypotheses;  // UTF-8, aligned with the sources
  std::int64_t truncated = 0;
};

// Decodes every source, detokenizes, scores word-level BLEU against the
// references.
EvalResult evaluate(const Model& model, std::span<const std::u32string> sources,
                    std::span<const std::u32string> references, int max_len);

}  // namespace charnmt
