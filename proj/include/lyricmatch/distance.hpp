#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lyricmatch {

// Myers bit-parallel edit distance, blocked for patterns longer than
// 64 symbols. The pattern is preprocessed once and can then be scored
// against many texts, which is what the cover-vs-original cross
// product needs. Symbols are 32-bit scalars, so the same kernel serves
// both character distance (code points) and word distance (token ids).
class BitParallelPattern {
 public:
  explicit BitParallelPattern(std::span<const char32_t> pattern);

  std::size_t length() const { return length_; }
  std::size_t distance(std::span<const char32_t> text) const;

  // Scores a batch of texts against the pattern. Texts are advanced two
  // at a time so the serial carry chain of one interleaves with the
  // other; results are identical to calling distance() per text.
  std::vector<std::size_t> distance_batch(
      std::span<const std::u32string> texts) const;

 private:
  std::size_t distance_pair(std::span<const char32_t> ta,
                            std::span<const char32_t> tb,
                            std::size_t& score_b,
                            std::uint64_t* scratch) const;

  const std::uint64_t* eq_row(char32_t c) const;

  std::size_t length_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> eq_;            // rows of `words_`; row 0 all-zero
  std::array<std::int32_t, 128> ascii_{};    // ASCII symbol -> row
  std::unordered_map<char32_t, std::int32_t> wide_;
};

// Character-level distance over Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);
std::size_t levenshtein(std::span<const char32_t> a, std::span<const char32_t> b);

// Full distance table, row i holding patterns[i] against every text.
// Rows are independent, so they are scored in parallel; the table is
// identical at every thread count.
std::vector<std::size_t> cross_distances(std::span<const std::u32string> patterns,
                                         std::span<const std::u32string> texts);

// Banded early-abandon variant: result iff the true distance <= limit.
std::optional<std::size_t> levenshtein_bounded(std::string_view a,
                                               std::string_view b,
                                               std::size_t limit);
std::optional<std::size_t> levenshtein_bounded(std::span<const char32_t> a,
                                               std::span<const char32_t> b,
                                               std::size_t limit);

// Word error rate: token-level edit distance / |reference|. Throws
// EmptyReference when the reference has no tokens.
double wer(std::span<const std::string> reference,
           std::span<const std::string> hypothesis);

// Token sequences mapped to dense ids ahead of time (one map per
// corpus) so repeated WER queries skip the string hashing.
std::u32string map_tokens(std::span<const std::string> tokens,
                          std::unordered_map<std::string, char32_t>& dict);
double wer_mapped(std::span<const char32_t> reference,
                  std::span<const char32_t> hypothesis);

struct Vocabulary {
  std::vector<std::string> terms;
  std::unordered_map<std::string, std::uint32_t> index;
  std::uint64_t ref_id = 0;  // content hash used to detect mismatched vectors
};

struct BowVector {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;  // sorted by id
  std::uint64_t vocab_ref = 0;
};

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus_tokens);
BowVector bow_vectorize(std::span<const std::string> tokens, const Vocabulary& vocab);
double cosine_distance(const BowVector& u, const BowVector& v);

double manhattan(std::span<const double> u, std::span<const double> v);
double manhattan(std::span<const float> u, std::span<const float> v);

// One term per line; line number = term id.
void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary load_vocabulary(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace lyricmatch
