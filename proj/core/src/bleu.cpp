#include "charnmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "charnmt/errors.hpp"

namespace charnmt {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

namespace {

// n-gram key: tokens joined with an unprintable separator.
void count_ngrams(const std::vector<std::string>& tokens, int n,
                  std::unordered_map<std::string, std::int64_t>& counts) {
  if (static_cast<int>(tokens.size()) < n) return;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += tokens[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
}

}  // namespace

BleuResult bleu(std::span<const std::string> hypotheses, std::span<const std::string> references,
                int max_n) {
  if (hypotheses.empty()) throw contract_error("bleu: empty corpus");
  if (hypotheses.size() != references.size()) {
    throw contract_error("bleu: need one reference per hypothesis, got " +
                         std::to_string(hypotheses.size()) + " vs " +
                         std::to_string(references.size()));
  }
  if (max_n < 1 || max_n > 4) throw contract_error("bleu: max_n must be in 1..4");

  BleuResult out;
  std::array<std::int64_t, 4> correct{};
  std::array<std::int64_t, 4> total{};
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const std::vector<std::string> hyp = split_tokens(hypotheses[s]);
    const std::vector<std::string> ref = split_tokens(references[s]);
    out.hyp_length += static_cast<std::int64_t>(hyp.size());
    out.ref_length += static_cast<std::int64_t>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      std::unordered_map<std::string, std::int64_t> hyp_counts, ref_counts;
      count_ngrams(hyp, n, hyp_counts);
      count_ngrams(ref, n, ref_counts);
      total[static_cast<std::size_t>(n - 1)] +=
          std::max<std::int64_t>(static_cast<std::int64_t>(hyp.size()) - n + 1, 0);
      for (const auto& [gram, cnt] : hyp_counts) {
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) {
          correct[static_cast<std::size_t>(n - 1)] += std::min(cnt, it->second);
        }
      }
    }
  }

  for (int n = 0; n < max_n; ++n) {
    out.precisions[static_cast<std::size_t>(n)] =
        total[static_cast<std::size_t>(n)] > 0
            ? static_cast<double>(correct[static_cast<std::size_t>(n)]) /
                  static_cast<double>(total[static_cast<std::size_t>(n)])
            : 0.0;
  }
  if (out.hyp_length == 0) {
    out.brevity_penalty = 0.0;
    out.score = 0.0;
    return out;
  }
  out.brevity_penalty =
      out.hyp_length > out.ref_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(out.ref_length) / static_cast<double>(out.hyp_length));

  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    const double p = out.precisions[static_cast<std::size_t>(n)];
    if (p <= 0.0) {
      out.score = 0.0;
      return out;
    }
    log_sum += std::log(p);
  }
  out.score = 100.0 * out.brevity_penalty * std::exp(log_sum / max_n);
  return out;
}

}  // namespace charnmt
