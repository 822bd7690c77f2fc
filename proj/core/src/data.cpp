#include "charnmt/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "charnmt/errors.hpp"
#include "charnmt/utf8.hpp"

namespace charnmt {

bool filter_pair(std::int64_t src_chars, std::int64_t trg_chars, std::int64_t src_limit,
                 std::int64_t trg_limit) {
  return src_chars <= src_limit && trg_chars <= trg_limit;
}

namespace {

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open corpus file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

RawCorpus load_parallel_text(const std::string& src_path, const std::string& trg_path,
                             std::int64_t src_limit, std::int64_t trg_limit) {
  std::vector<std::string> src_lines = read_lines(src_path);
  std::vector<std::string> trg_lines = read_lines(trg_path);
  if (src_lines.size() != trg_lines.size()) {
    throw config_error("corpus files differ in line count: " + src_path + " has " +
                       std::to_string(src_lines.size()) + ", " + trg_path + " has " +
                       std::to_string(trg_lines.size()));
  }
  RawCorpus out;
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    std::u32string s = utf8_decode(src_lines[i]);
    std::u32string t = utf8_decode(trg_lines[i]);
    if (s.empty() || t.empty()) {
      ++out.dropped_empty;
      continue;
    }
    if (!filter_pair(static_cast<std::int64_t>(s.size()), static_cast<std::int64_t>(t.size()),
                     src_limit, trg_limit)) {
      ++out.dropped_by_length;
      continue;
    }
    out.src.push_back(std::move(s));
    out.trg.push_back(std::move(t));
  }
  return out;
}

Corpus make_corpus(const RawCorpus& raw, Vocabulary src_vocab, Vocabulary trg_vocab) {
  Corpus corpus;
  corpus.src_vocab = std::move(src_vocab);
  corpus.trg_vocab = std::move(trg_vocab);
  corpus.pairs.reserve(raw.src.size());
  for (std::size_t i = 0; i < raw.src.size(); ++i) {
    SentencePair pair;
    pair.src_text = raw.src[i];
    pair.trg_text = raw.trg[i];
    pair.src_ids = encode_text(pair.src_text, corpus.src_vocab);
    pair.trg_ids = encode_text(pair.trg_text, corpus.trg_vocab);
    pair.trg_ids.push_back(Vocabulary::kEos);
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

std::int64_t Batch::real_chars() const {
  std::int64_t n = 0;
  for (double m : src_mask.data) n += m != 0.0 ? 1 : 0;
  for (double m : trg_mask.data) n += m != 0.0 ? 1 : 0;
  return n;
}

Batch make_batch(const Corpus& corpus, std::span<const int> sample_ids) {
  if (sample_ids.empty()) throw contract_error("make_batch: no samples");
  Batch b;
  b.batch_size = static_cast<std::int64_t>(sample_ids.size());
  for (int id : sample_ids) {
    const SentencePair& p = corpus.pairs[static_cast<std::size_t>(id)];
    b.src_len = std::max(b.src_len, static_cast<std::int64_t>(p.src_ids.size()));
    b.trg_len = std::max(b.trg_len, static_cast<std::int64_t>(p.trg_ids.size()));
  }
  b.src_ids.assign(static_cast<std::size_t>(b.batch_size * b.src_len), Vocabulary::kPad);
  b.trg_ids.assign(static_cast<std::size_t>(b.batch_size * b.trg_len), Vocabulary::kPad);
  b.src_mask = Tensor::zeros({b.batch_size, b.src_len});
  b.trg_mask = Tensor::zeros({b.batch_size, b.trg_len});
  b.sample_ids.assign(sample_ids.begin(), sample_ids.end());
  for (std::int64_t row = 0; row < b.batch_size; ++row) {
    const SentencePair& p = corpus.pairs[static_cast<std::size_t>(sample_ids[static_cast<std::size_t>(row)])];
    for (std::size_t t = 0; t < p.src_ids.size(); ++t) {
      b.src_ids[static_cast<std::size_t>(row * b.src_len) + t] = p.src_ids[t];
      b.src_mask.at(row, static_cast<std::int64_t>(t)) = 1.0;
    }
    for (std::size_t t = 0; t < p.trg_ids.size(); ++t) {
      b.trg_ids[static_cast<std::size_t>(row * b.trg_len) + t] = p.trg_ids[t];
      b.trg_mask.at(row, static_cast<std::int64_t>(t)) = 1.0;
    }
  }
  return b;
}

namespace {

std::vector<Batch> pack_in_order(const Corpus& corpus, const std::vector<int>& order,
                                 std::int64_t budget) {
  std::vector<Batch> batches;
  std::vector<int> current;
  std::int64_t max_src = 0, max_trg = 0;
  for (int id : order) {
    const SentencePair& p = corpus.pairs[static_cast<std::size_t>(id)];
    const auto src_len = static_cast<std::int64_t>(p.src_ids.size());
    const auto trg_len = static_cast<std::int64_t>(p.trg_ids.size());
    if (src_len + trg_len > budget) {
      throw config_error("batch budget " + std::to_string(budget) +
                         " cannot fit sample " + std::to_string(id) + " with padded cost " +
                         std::to_string(src_len + trg_len));
    }
    const std::int64_t new_src = std::max(max_src, src_len);
    const std::int64_t new_trg = std::max(max_trg, trg_len);
    const std::int64_t new_cost = (static_cast<std::int64_t>(current.size()) + 1) * (new_src + new_trg);
    if (!current.empty() && new_cost > budget) {
      batches.push_back(make_batch(corpus, current));
      current.clear();
      max_src = max_trg = 0;
    }
    current.push_back(id);
    max_src = std::max(max_src, src_len);
    max_trg = std::max(max_trg, trg_len);
  }
  if (!current.empty()) batches.push_back(make_batch(corpus, current));
  return batches;
}

std::vector<int> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  return order;
}

}  // namespace

std::vector<Batch> make_epoch_batches(const Corpus& corpus, std::int64_t budget, Rng& rng) {
  if (corpus.pairs.empty()) throw contract_error("make_epoch_batches: empty corpus");
  std::vector<int> order = shuffled_order(corpus.pairs.size(), rng);
  // Stable sort keeps the shuffled order among equal-length pairs, so batch
  // composition varies between epochs.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const SentencePair& pa = corpus.pairs[static_cast<std::size_t>(a)];
    const SentencePair& pb = corpus.pairs[static_cast<std::size_t>(b)];
    if (pa.src_ids.size() != pb.src_ids.size()) return pa.src_ids.size() < pb.src_ids.size();
    return pa.trg_ids.size() < pb.trg_ids.size();
  });
  std::vector<Batch> batches = pack_in_order(corpus, order, budget);
  rng.shuffle(batches);
  return batches;
}

std::vector<Batch> make_random_batches(const Corpus& corpus, std::int64_t budget, Rng& rng) {
  if (corpus.pairs.empty()) throw contract_error("make_random_batches: empty corpus");
  return pack_in_order(corpus, shuffled_order(corpus.pairs.size(), rng), budget);
}

double padding_waste(const std::vector<Batch>& batches) {
  std::int64_t padded = 0, real = 0;
  for (const Batch& b : batches) {
    padded += b.padded_cost();
    real += b.real_chars();
  }
  if (padded == 0) return 0.0;
  return static_cast<double>(padded - real) / static_cast<double>(padded);
}

}  // namespace charnmt
