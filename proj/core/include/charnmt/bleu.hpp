#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace charnmt {

struct BleuResult {
  double score = 0.0;                  // 0..100
  std::array<double, 4> precisions{};  // modified n-gram precision, n = 1..4
  double brevity_penalty = 0.0;
  std::int64_t hyp_length = 0;
  std::int64_t ref_length = 0;
};

// Corpus-level BLEU with clipped modified n-gram precision, geometric mean
// over n = 1..max_n and brevity penalty min(1, e^(1 - r/c)). One reference
// per hypothesis; tokens are whitespace-split words. Any zero precision
// collapses the score to 0 (no smoothing).
BleuResult bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                int max_n = 4);

std::vector<std::string> split_tokens(const std::string& line);

}  // namespace charnmt
