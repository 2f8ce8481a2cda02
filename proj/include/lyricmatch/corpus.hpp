#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lyricmatch/textnorm.hpp"

namespace lyricmatch {

enum class Role { Original, Cover };

struct SongRecord {
  std::string id;
  std::string title;
  std::string artist;
  std::string lyrics;
  Role role = Role::Original;
  std::optional<std::string> original_id;
  std::optional<std::string> language;

  bool operator==(const SongRecord&) const = default;
};

struct Corpus {
  std::vector<SongRecord> records;                        // file order
  std::map<std::string, std::vector<std::string>> groups; // original -> covers
  std::unordered_map<std::string, std::size_t> by_id;

  std::size_t n_originals() const;
  std::size_t n_covers() const;
};

enum class CorpusFormat { JsonLines, Csv };

// Builds the group map and checks identity/linkage invariants; every
// ingest path funnels through this.
Corpus finalize_corpus(std::vector<SongRecord> records);

Corpus ingest(const std::filesystem::path& path, CorpusFormat format);
Corpus ingest_stream(std::istream& in, CorpusFormat format);
void serialize(const Corpus& corpus, std::ostream& out, CorpusFormat format);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format);

enum class DistanceMetric { Levenshtein, Wer };

struct CorpusStats {
  double mean_matched = 0;
  double mean_unmatched = 0;
  double min_unmatched_mean = 0;
  double confusion_fraction = 0;
  std::size_t matched_pairs = 0;
  std::size_t unmatched_pairs = 0;
  std::size_t skipped_pairs = 0;  // WER pairs dropped for empty references
  double histogram_max = 0;
  std::vector<std::uint64_t> matched_histogram;
  std::vector<std::uint64_t> unmatched_histogram;
};

inline constexpr std::size_t kStatsBins = 50;

// Distance analysis of every cover against its own original (matched)
// and all other originals (unmatched), on normalized lyrics.
CorpusStats corpus_stats(const Corpus& corpus, DistanceMetric metric,
                         const NormalizationConfig& norm);

std::vector<NormalizedLyrics> normalize_corpus(const Corpus& corpus,
                                               const NormalizationConfig& norm);

}  // namespace lyricmatch
