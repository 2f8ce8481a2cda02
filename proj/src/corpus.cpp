#include "lyricmatch/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "lyricmatch/distance.hpp"
#include "lyricmatch/errors.hpp"
#include "lyricmatch/utf8.hpp"

namespace lyricmatch {

namespace {

bool blank_after_trim(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::string role_name(Role r) {
  return r == Role::Original ? "original" : "cover";
}

SongRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
  SongRecord r;
  try {
    r.id = j.at("id").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.artist = j.at("artist").get<std::string>();
    r.lyrics = j.at("lyrics").get<std::string>();
    const std::string role = j.at("role").get<std::string>();
    if (role == "original") {
      r.role = Role::Original;
    } else if (role == "cover") {
      r.role = Role::Cover;
    } else {
      throw ParseError(line, "unknown role \"" + role + "\" in record " + r.id);
    }
    if (j.contains("original_id") && !j.at("original_id").is_null())
      r.original_id = j.at("original_id").get<std::string>();
    if (j.contains("language") && !j.at("language").is_null())
      r.language = j.at("language").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, e.what());
  }
  return r;
}

nlohmann::ordered_json record_to_json(const SongRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["artist"] = r.artist;
  j["lyrics"] = r.lyrics;
  j["role"] = role_name(r.role);
  if (r.original_id) j["original_id"] = *r.original_id;
  if (r.language) j["language"] = *r.language;
  return j;
}

constexpr const char* kCsvHeader = "id,title,artist,lyrics,role,original_id,language";

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

// RFC-4180 style reader; quoted fields may span lines.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at end of input. `line` reports where the row began.
  bool next_row(std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in_.get();
    while (c == '\n' || c == '\r') {
      if (c == '\n') ++line_;
      c = in_.get();
    }
    if (c == EOF) return false;
    line = line_ + 1;
    std::string field;
    bool quoted = false;
    while (true) {
      if (c == EOF) {
        if (quoted) throw ParseError(line, "unterminated quoted field");
        fields.push_back(std::move(field));
        return true;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          const int peek = in_.peek();
          if (peek == '"') {
            field += '"';
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field += ch;
        }
      } else if (ch == '"') {
        if (!field.empty()) throw ParseError(line, "stray quote inside field");
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\r') {
        // swallow; newline ends the row
      } else if (ch == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return true;
      } else {
        field += ch;
      }
      c = in_.get();
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

std::vector<SongRecord> parse_jsonl(std::istream& in) {
  std::vector<SongRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank_after_trim(line)) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno, e.what());
    }
    records.push_back(record_from_json(j, lineno));
  }
  return records;
}

std::vector<SongRecord> parse_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!reader.next_row(fields, line)) return {};
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
  for (const char* required : {"id", "title", "artist", "lyrics", "role"}) {
    if (!col.count(required))
      throw ParseError(line, std::string("missing CSV column \"") + required + "\"");
  }
  auto get = [&](const std::vector<std::string>& row, const char* name,
                 std::size_t at) -> std::string {
    auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) return "";
    (void)at;
    return row[it->second];
  };
  std::vector<SongRecord> records;
  while (reader.next_row(fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    SongRecord r;
    r.id = get(fields, "id", line);
    r.title = get(fields, "title", line);
    r.artist = get(fields, "artist", line);
    r.lyrics = get(fields, "lyrics", line);
    const std::string role = get(fields, "role", line);
    if (role == "original") {
      r.role = Role::Original;
    } else if (role == "cover") {
      r.role = Role::Cover;
    } else {
      throw ParseError(line, "unknown role \"" + role + "\" in record " + r.id);
    }
    const std::string orig = get(fields, "original_id", line);
    if (!orig.empty()) r.original_id = orig;
    const std::string lang = get(fields, "language", line);
    if (!lang.empty()) r.language = lang;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

std::size_t Corpus::n_originals() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(),
                    [](const SongRecord& r) { return r.role == Role::Original; }));
}

std::size_t Corpus::n_covers() const { return records.size() - n_originals(); }

Corpus finalize_corpus(std::vector<SongRecord> records) {
  Corpus c;
  c.records = std::move(records);
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    const SongRecord& r = c.records[i];
    if (r.id.empty()) throw IntegrityError("record at position " +
                                           std::to_string(i) + " has empty id");
    if (!c.by_id.emplace(r.id, i).second)
      throw IntegrityError("duplicate id \"" + r.id + "\"");
    if (blank_after_trim(r.lyrics))
      throw IntegrityError("empty lyrics in record \"" + r.id + "\"");
    if (r.role == Role::Cover && !r.original_id)
      throw IntegrityError("cover \"" + r.id + "\" lacks original_id");
    if (r.role == Role::Original && r.original_id)
      throw IntegrityError("original \"" + r.id + "\" carries original_id \"" +
                           *r.original_id + "\"");
  }
  for (const SongRecord& r : c.records) {
    if (r.role == Role::Original) c.groups.emplace(r.id, std::vector<std::string>{});
  }
  for (const SongRecord& r : c.records) {
    if (r.role != Role::Cover) continue;
    auto it = c.groups.find(*r.original_id);
    if (it == c.groups.end())
      throw IntegrityError("cover \"" + r.id + "\" references missing original \"" +
                           *r.original_id + "\"");
    auto target = c.by_id.find(*r.original_id);
    if (c.records[target->second].role != Role::Original)
      throw IntegrityError("cover \"" + r.id + "\" references non-original \"" +
                           *r.original_id + "\"");
    it->second.push_back(r.id);
  }
  return c;
}

Corpus ingest_stream(std::istream& in, CorpusFormat format) {
  return finalize_corpus(format == CorpusFormat::JsonLines ? parse_jsonl(in)
                                                           : parse_csv(in));
}

Corpus ingest(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return ingest_stream(in, format);
}

void serialize(const Corpus& corpus, std::ostream& out, CorpusFormat format) {
  if (format == CorpusFormat::JsonLines) {
    for (const SongRecord& r : corpus.records) out << record_to_json(r).dump() << '\n';
    return;
  }
  out << kCsvHeader << '\n';
  for (const SongRecord& r : corpus.records) {
    out << csv_quote(r.id) << ',' << csv_quote(r.title) << ','
        << csv_quote(r.artist) << ',' << csv_quote(r.lyrics) << ','
        << role_name(r.role) << ','
        << csv_quote(r.original_id.value_or("")) << ','
        << csv_quote(r.language.value_or("")) << '\n';
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  serialize(corpus, out, format);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<NormalizedLyrics> normalize_corpus(const Corpus& corpus,
                                               const NormalizationConfig& norm) {
  std::vector<NormalizedLyrics> out(corpus.records.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(corpus.records.size()); ++i)
    out[static_cast<std::size_t>(i)] = normalize(corpus.records[static_cast<std::size_t>(i)].lyrics, norm);
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus, DistanceMetric metric,
                         const NormalizationConfig& norm) {
  std::vector<std::size_t> original_idx, cover_idx;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    (corpus.records[i].role == Role::Original ? original_idx : cover_idx).push_back(i);
  }
  if (cover_idx.empty() || original_idx.size() < 2)
    throw InsufficientCorpus("corpus_stats needs >=1 cover and >=2 originals, got " +
                             std::to_string(cover_idx.size()) + " covers / " +
                             std::to_string(original_idx.size()) + " originals");

  const std::vector<NormalizedLyrics> normed = normalize_corpus(corpus, norm);

  // Distance inputs as 32-bit symbol strings: code points for the
  // character metric, token ids for the word metric.
  std::vector<std::u32string> seqs(corpus.records.size());
  if (metric == DistanceMetric::Levenshtein) {
    for (std::size_t i = 0; i < normed.size(); ++i)
      seqs[i] = decode_utf8(normed[i].text);
  } else {
    std::unordered_map<std::string, char32_t> dict;
    for (std::size_t i = 0; i < normed.size(); ++i)
      seqs[i] = map_tokens(normed[i].tokens, dict);
  }

  std::unordered_map<std::string, std::size_t> original_slot;
  for (std::size_t k = 0; k < original_idx.size(); ++k)
    original_slot[corpus.records[original_idx[k]].id] = k;

  const std::size_t n_cov = cover_idx.size();
  const std::size_t n_org = original_idx.size();
  const double kInvalid = -1.0;
  std::vector<double> dist(n_cov * n_org, kInvalid);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(n_cov); ++ci) {
    const std::size_t c = cover_idx[static_cast<std::size_t>(ci)];
    const BitParallelPattern pattern(seqs[c]);
    double* row = dist.data() + static_cast<std::size_t>(ci) * n_org;
    for (std::size_t k = 0; k < n_org; ++k) {
      const std::u32string& org = seqs[original_idx[k]];
      if (metric == DistanceMetric::Wer) {
        if (org.empty()) continue;  // stays kInvalid, counted as skipped
        const std::size_t lev = seqs[c].size() <= org.size()
                                    ? pattern.distance(org)
                                    : levenshtein(org, seqs[c]);
        row[k] = static_cast<double>(lev) / static_cast<double>(org.size());
      } else {
        row[k] = seqs[c].size() <= org.size()
                     ? static_cast<double>(pattern.distance(org))
                     : static_cast<double>(levenshtein(org, seqs[c]));
      }
    }
  }

  CorpusStats stats;
  double sum_matched = 0, sum_unmatched = 0, sum_min_unmatched = 0;
  std::size_t confused = 0, covers_with_min = 0, covers_matched = 0;
  double max_d = 0;
  for (std::size_t ci = 0; ci < n_cov; ++ci) {
    const SongRecord& cov = corpus.records[cover_idx[ci]];
    const std::size_t true_k = original_slot.at(*cov.original_id);
    const double* row = dist.data() + ci * n_org;
    const double matched = row[true_k];
    if (matched >= 0) {
      sum_matched += matched;
      ++covers_matched;
      ++stats.matched_pairs;
      max_d = std::max(max_d, matched);
    } else {
      ++stats.skipped_pairs;
    }
    double min_un = -1;
    bool closer = false;
    for (std::size_t k = 0; k < n_org; ++k) {
      if (k == true_k) continue;
      const double d = row[k];
      if (d < 0) {
        ++stats.skipped_pairs;
        continue;
      }
      sum_unmatched += d;
      ++stats.unmatched_pairs;
      max_d = std::max(max_d, d);
      if (min_un < 0 || d < min_un) min_un = d;
      if (matched >= 0 && d < matched) closer = true;
    }
    if (min_un >= 0) {
      sum_min_unmatched += min_un;
      ++covers_with_min;
    }
    if (closer) ++confused;
  }

  stats.mean_matched = covers_matched ? sum_matched / covers_matched : 0.0;
  stats.mean_unmatched =
      stats.unmatched_pairs ? sum_unmatched / stats.unmatched_pairs : 0.0;
  stats.min_unmatched_mean =
      covers_with_min ? sum_min_unmatched / covers_with_min : 0.0;
  stats.confusion_fraction =
      covers_matched ? static_cast<double>(confused) / covers_matched : 0.0;

  stats.histogram_max = max_d;
  stats.matched_histogram.assign(kStatsBins, 0);
  stats.unmatched_histogram.assign(kStatsBins, 0);
  const double width = max_d > 0 ? max_d / kStatsBins : 1.0;
  auto bin_of = [&](double d) {
    auto b = static_cast<std::size_t>(d / width);
    return std::min(b, kStatsBins - 1);
  };
  for (std::size_t ci = 0; ci < n_cov; ++ci) {
    const SongRecord& cov = corpus.records[cover_idx[ci]];
    const std::size_t true_k = original_slot.at(*cov.original_id);
    const double* row = dist.data() + ci * n_org;
    for (std::size_t k = 0; k < n_org; ++k) {
      if (row[k] < 0) continue;
      auto& hist = (k == true_k) ? stats.matched_histogram : stats.unmatched_histogram;
      ++hist[bin_of(row[k])];
    }
  }
  return stats;
}

}  // namespace lyricmatch
