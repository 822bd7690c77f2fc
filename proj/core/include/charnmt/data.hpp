#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "charnmt/rng.hpp"
#include "charnmt/tensor.hpp"
#include "charnmt/vocab.hpp"

namespace charnmt {

struct SentencePair {
  std::u32string src_text;
  std::u32string trg_text;
  std::vector<int> src_ids;
  std::vector<int> trg_ids;  // eos appended
};

struct Corpus {
  std::vector<SentencePair> pairs;
  Vocabulary src_vocab;
  Vocabulary trg_vocab;
};

// Keep iff source <= src_limit and target <= trg_limit characters.
bool filter_pair(std::int64_t src_chars, std::int64_t trg_chars, std::int64_t src_limit = 250,
                 std::int64_t trg_limit = 500);

// Two aligned one-sentence-per-line UTF-8 files. Pairs over the length
// limits and pairs with an empty side are dropped.
struct RawCorpus {
  std::vector<std::u32string> src;
  std::vector<std::u32string> trg;
  std::int64_t dropped_by_length = 0;
  std::int64_t dropped_empty = 0;
};
RawCorpus load_parallel_text(const std::string& src_path, const std::string& trg_path,
                             std::int64_t src_limit = 250, std::int64_t trg_limit = 500);

// Encodes a raw corpus with the given vocabularies.
Corpus make_corpus(const RawCorpus& raw, Vocabulary src_vocab, Vocabulary trg_vocab);

// Padded id matrices plus 0/1 masks for a set of pairs. Ids are row-major
// (batch x length), padded with pad ids.
struct Batch {
  std::int64_t batch_size = 0;
  std::int64_t src_len = 0;
  std::int64_t trg_len = 0;
  std::vector<int> src_ids;   // batch_size x src_len
  std::vector<int> trg_ids;   // batch_size x trg_len
  Tensor src_mask;            // (batch_size, src_len)
  Tensor trg_mask;            // (batch_size, trg_len)
  std::vector<int> sample_ids;  // corpus indices, for bookkeeping

  int src_at(std::int64_t row, std::int64_t t) const {
    return src_ids[static_cast<std::size_t>(row * src_len + t)];
  }
  int trg_at(std::int64_t row, std::int64_t t) const {
    return trg_ids[static_cast<std::size_t>(row * trg_len + t)];
  }
  std::int64_t padded_cost() const { return batch_size * (src_len + trg_len); }
  std::int64_t real_chars() const;
};

Batch make_batch(const Corpus& corpus, std::span<const int> sample_ids);

// One epoch of batches: shuffle, stable sort by (source length, target
// length), pack greedily while batch_size * (max src len + max trg len)
// stays within the budget, then shuffle batch order. Every sample appears
// exactly once.
std::vector<Batch> make_epoch_batches(const Corpus& corpus, std::int64_t budget, Rng& rng);

// Same packing rule applied to an unsorted shuffle. Reference point for
// measuring how much padding the sorting saves.
std::vector<Batch> make_random_batches(const Corpus& corpus, std::int64_t budget, Rng& rng);

// (padded - real) / padded over a whole epoch.
double padding_waste(const std::vector<Batch>& batches);

}  // namespace charnmt
