#include "lyricmatch/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include <json.hpp>

#include "lyricmatch/errors.hpp"
#include "lyricmatch/utf8.hpp"

namespace lyricmatch {

namespace {

void sort_ranking(std::vector<std::pair<std::string, double>>& ranking) {
  std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
}

void write_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(v & 0xFF);
  out.push_back((v >> 8) & 0xFF);
}

void write_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back((v >> s) & 0xFF);
}

void write_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back((v >> s) & 0xFF);
}

constexpr char kIndexMagic[8] = "LYREMB1";  // 7 chars + NUL stored as 8 bytes

}  // namespace

std::string rank_metric_name(RankMetric m) {
  switch (m) {
    case RankMetric::Levenshtein:
      return "levenshtein";
    case RankMetric::Wer:
      return "wer";
    case RankMetric::BowCosine:
      return "bow_cosine";
    case RankMetric::EmbeddingManhattan:
      return "embedding_manhattan";
  }
  return "unknown";
}

EmbeddingIndex build_index(
    std::span<const std::pair<std::string, NormalizedLyrics>> originals,
    const HeadParams& params, const FeatureScheme& scheme) {
  EmbeddingIndex index;
  index.dim = params.dims.e;
  index.head_fingerprint = head_fingerprint(params, scheme);
  std::unordered_set<std::string> seen;
  for (const auto& [id, lyrics] : originals) {
    if (!seen.insert(id).second)
      throw DuplicateId("duplicate original id \"" + id + "\"");
  }
  if (originals.empty()) return index;

  Matrix features(originals.size(), scheme.dim);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(originals.size()); ++i) {
    const FeatureVector f =
        extract_features(originals[static_cast<std::size_t>(i)].second, scheme);
    std::copy(f.values.begin(), f.values.end(),
              features.row(static_cast<std::size_t>(i)));
  }
  const Matrix emb = head_forward_batch(features, params);
  index.entries.reserve(originals.size());
  for (std::size_t i = 0; i < originals.size(); ++i) {
    std::vector<float> v(emb.cols);
    for (std::size_t j = 0; j < emb.cols; ++j)
      v[j] = static_cast<float>(emb.at(i, j));
    index.entries.emplace_back(originals[i].first, std::move(v));
  }
  return index;
}

RankedResult rank(const std::string& query_id, const NormalizedLyrics& query,
                  const EmbeddingIndex& index, const HeadParams& params,
                  const FeatureScheme& scheme) {
  if (head_fingerprint(params, scheme) != index.head_fingerprint)
    throw FingerprintMismatch(
        "index was built with a different head (fingerprint mismatch)");
  RankedResult out;
  out.query_id = query_id;
  out.metric = RankMetric::EmbeddingManhattan;
  if (index.entries.empty()) return out;

  const EmbeddingVector emb = head_forward(extract_features(query, scheme), params);
  std::vector<float> q(emb.size());
  for (std::size_t j = 0; j < emb.size(); ++j) q[j] = static_cast<float>(emb[j]);

  out.ranking.reserve(index.entries.size());
  for (const auto& [id, vec] : index.entries) {
    out.ranking.emplace_back(
        id, manhattan(std::span<const float>(q), std::span<const float>(vec)));
  }
  sort_ranking(out.ranking);
  return out;
}

RankedResult rank_baseline(
    const std::string& query_id, const NormalizedLyrics& query,
    std::span<const std::pair<std::string, NormalizedLyrics>> originals,
    RankMetric metric, const Vocabulary* vocab) {
  RankedResult out;
  out.query_id = query_id;
  out.metric = metric;
  out.ranking.reserve(originals.size());

  switch (metric) {
    case RankMetric::Levenshtein: {
      const std::u32string q = decode_utf8(query.text);
      const BitParallelPattern pattern(q);
      for (const auto& [id, lyr] : originals) {
        const std::u32string c = decode_utf8(lyr.text);
        const std::size_t d = q.size() <= c.size()
                                  ? pattern.distance(c)
                                  : levenshtein(c, q);
        out.ranking.emplace_back(id, static_cast<double>(d));
      }
      break;
    }
    case RankMetric::Wer: {
      // Reference = candidate original, hypothesis = query cover.
      std::unordered_map<std::string, char32_t> dict;
      const std::u32string h = map_tokens(query.tokens, dict);
      for (const auto& [id, lyr] : originals) {
        const std::u32string r = map_tokens(lyr.tokens, dict);
        if (r.empty()) {
          // A degenerate database entry must not abort the scan; it
          // just sorts last.
          out.ranking.emplace_back(id, std::numeric_limits<double>::infinity());
        } else {
          out.ranking.emplace_back(id, wer_mapped(r, h));
        }
      }
      break;
    }
    case RankMetric::BowCosine: {
      if (vocab == nullptr)
        throw MissingVocabulary("bow ranking requires a vocabulary");
      const BowVector q = bow_vectorize(query.tokens, *vocab);
      for (const auto& [id, lyr] : originals) {
        out.ranking.emplace_back(
            id, cosine_distance(q, bow_vectorize(lyr.tokens, *vocab)));
      }
      break;
    }
    case RankMetric::EmbeddingManhattan:
      throw Error("rank_baseline does not serve the embedding metric");
  }
  sort_ranking(out.ranking);
  return out;
}

std::vector<std::uint8_t> serialize_index(const EmbeddingIndex& index) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kIndexMagic, kIndexMagic + 7);
  write_u32(out, index.dim);
  write_u32(out, static_cast<std::uint32_t>(index.entries.size()));
  write_u64(out, index.head_fingerprint);
  for (const auto& [id, vec] : index.entries) {
    if (id.size() > 0xFFFF)
      throw IoError("original id longer than 65535 bytes: " + id.substr(0, 32));
    if (vec.size() != index.dim)
      throw DimensionMismatch("index entry \"" + id + "\" has dim " +
                              std::to_string(vec.size()));
    write_u16(out, static_cast<std::uint16_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
    for (float f : vec) write_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_index(index);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

EmbeddingIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  std::size_t at = 0;
  auto need = [&](std::size_t n) {
    if (at + n > bytes.size()) throw IoError("truncated index file: " + path.string());
  };
  need(7);
  if (std::memcmp(bytes.data(), kIndexMagic, 7) != 0)
    throw IoError("not an index file: " + path.string());
  at = 7;
  auto u16 = [&]() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8));
    at += 2;
    return v;
  };
  auto u32 = [&]() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(bytes[at++]) << s;
    return v;
  };
  auto u64 = [&]() {
    need(8);
    std::uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= static_cast<std::uint64_t>(bytes[at++]) << s;
    return v;
  };
  EmbeddingIndex index;
  index.dim = u32();
  const std::uint32_t count = u32();
  index.head_fingerprint = u64();
  std::unordered_set<std::string> seen;
  index.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = u16();
    need(len);
    std::string id(reinterpret_cast<const char*>(bytes.data() + at), len);
    at += len;
    if (!seen.insert(id).second)
      throw DuplicateId("duplicate id in index file: \"" + id + "\"");
    std::vector<float> vec(index.dim);
    for (std::uint32_t j = 0; j < index.dim; ++j) {
      const float f = std::bit_cast<float>(u32());
      if (!std::isfinite(f))
        throw IoError("non-finite embedding in index file: " + path.string());
      vec[j] = f;
    }
    index.entries.emplace_back(std::move(id), std::move(vec));
  }
  if (at != bytes.size())
    throw IoError("trailing bytes in index file: " + path.string());
  return index;
}

std::string ranked_result_json(const RankedResult& result, std::size_t top_k) {
  nlohmann::ordered_json j;
  j["query_id"] = result.query_id;
  j["metric"] = rank_metric_name(result.metric);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  const std::size_t n = std::min(top_k, result.ranking.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [id, d] = result.ranking[i];
    nlohmann::ordered_json pair = nlohmann::ordered_json::array();
    pair.push_back(id);
    if (std::isinf(d)) {
      pair.push_back("inf");  // JSON has no infinity literal
    } else {
      pair.push_back(d);
    }
    arr.push_back(pair);
  }
  j["ranking"] = std::move(arr);
  return j.dump();
}

}  // namespace lyricmatch
