#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace charnmt {

/// Bijection between characters and integer ids with four reserved ids in
/// front. Built from the k most common characters of a corpus side;
/// everything else maps to unk.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kReserved = 4;

  Vocabulary() = default;

  /// Adds a character with its corpus frequency. Insertion order fixes the
  /// ids, starting at kReserved.
  void add_char(char32_t c, std::int64_t frequency);

  int size() const { return static_cast<int>(chars_.size()) + kReserved; }
  bool contains(char32_t c) const { return index_.count(c) != 0; }
  int id_of(char32_t c) const;  // kUnk when absent
  /// Inverse of id_of for non-reserved ids.
  char32_t char_of(int id) const;
  std::int64_t frequency_of(int id) const;
  bool is_reserved(int id) const { return id >= 0 && id < kReserved; }

  /// One line per entry: id, code point in hex, frequency, tab separated.
  /// Reserved ids come first with code points 0x0..0x3 and frequency 0.
  void dump(std::ostream& os) const;
  static Vocabulary parse(std::istream& is);

  bool operator==(const Vocabulary& other) const;

 private:
  std::vector<std::pair<char32_t, std::int64_t>> chars_;  // id - kReserved -> (char, freq)
  std::unordered_map<char32_t, int> index_;
};

/// Top-k characters by frequency, ties broken by code point ascending. With
/// ensure_space, U+0020 is forced into the selection (replacing the last
/// pick if it did not make the cut), so word boundaries stay expressible.
Vocabulary build_vocab(std::span<const std::u32string> corpus_side, int k = 300,
                       bool ensure_space = false);

/// Per-character ids; characters outside the vocabulary become unk.
std::vector<int> encode_text(const std::u32string& text, const Vocabulary& vocab);

/// Inverse of encode_text for renderable ids: unk prints U+FFFD, pad/bos/eos
/// print nothing.
std::u32string decode_ids(std::span<const int> ids, const Vocabulary& vocab);

}  // namespace charnmt
