#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lyricmatch/distance.hpp"
#include "lyricmatch/embedding.hpp"
#include "lyricmatch/textnorm.hpp"

namespace lyricmatch {

enum class RankMetric { Levenshtein, Wer, BowCosine, EmbeddingManhattan };

std::string rank_metric_name(RankMetric m);

struct EmbeddingIndex {
  std::uint32_t dim = 0;
  std::uint64_t head_fingerprint = 0;
  std::vector<std::pair<std::string, std::vector<float>>> entries;
};

struct RankedResult {
  std::string query_id;
  std::vector<std::pair<std::string, double>> ranking;  // ascending distance
  RankMetric metric = RankMetric::EmbeddingManhattan;
};

EmbeddingIndex build_index(
    std::span<const std::pair<std::string, NormalizedLyrics>> originals,
    const HeadParams& params, const FeatureScheme& scheme);

RankedResult rank(const std::string& query_id, const NormalizedLyrics& query,
                  const EmbeddingIndex& index, const HeadParams& params,
                  const FeatureScheme& scheme);

// Brute-force ranking under one of the three baseline distances.
// `vocab` is required for BowCosine only.
RankedResult rank_baseline(
    const std::string& query_id, const NormalizedLyrics& query,
    std::span<const std::pair<std::string, NormalizedLyrics>> originals,
    RankMetric metric, const Vocabulary* vocab = nullptr);

// LYREMB1 binary format.
std::vector<std::uint8_t> serialize_index(const EmbeddingIndex& index);
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex load_index(const std::filesystem::path& path);

// One JSON line per query for the rank report stream.
std::string ranked_result_json(const RankedResult& result, std::size_t top_k);

}  // namespace lyricmatch
