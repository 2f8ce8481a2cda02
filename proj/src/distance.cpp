#include "lyricmatch/distance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lyricmatch/errors.hpp"
#include "lyricmatch/utf8.hpp"

namespace lyricmatch {

namespace {

// One step of Myers' algorithm on a 64-symbol block. `hin`/`hout` are
// the horizontal deltas entering and leaving the block; `out_bit`
// selects which row the caller tracks (bit 63 inside a column, the
// pattern's last row in the top block).
inline int advance_block(std::uint64_t& vp, std::uint64_t& vn, std::uint64_t eq,
                         int hin, std::uint64_t out_bit) {
  const std::uint64_t xv = eq | vn;
  if (hin < 0) eq |= 1ULL;
  const std::uint64_t xh = (((eq & vp) + vp) ^ vp) | eq;
  std::uint64_t ph = vn | ~(xh | vp);
  std::uint64_t mh = vp & xh;
  const int hout =
      static_cast<int>((ph & out_bit) != 0) - static_cast<int>((mh & out_bit) != 0);
  ph <<= 1;
  mh <<= 1;
  if (hin > 0)
    ph |= 1ULL;
  else if (hin < 0)
    mh |= 1ULL;
  vp = mh | ~(xv | ph);
  vn = ph & xv;
  return hout;
}

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = kFnvOffset;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = kFnvOffset;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

BitParallelPattern::BitParallelPattern(std::span<const char32_t> pattern) {
  length_ = pattern.size();
  words_ = (length_ + 63) / 64;
  ascii_.fill(0);
  if (length_ == 0) return;
  // Row 0 stays all-zero and serves every symbol absent from the
  // pattern, so the hot loop never branches on missing entries.
  std::int32_t rows = 1;
  std::vector<std::int32_t> row_of(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char32_t c = pattern[i];
    std::int32_t idx;
    if (c < 128) {
      if (ascii_[c] == 0) ascii_[c] = rows++;
      idx = ascii_[c];
    } else {
      auto [it, fresh] = wide_.try_emplace(c, rows);
      if (fresh) ++rows;
      idx = it->second;
    }
    row_of[i] = idx;
  }
  eq_.assign(static_cast<std::size_t>(rows) * words_, 0);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    eq_[static_cast<std::size_t>(row_of[i]) * words_ + i / 64] |=
        1ULL << (i % 64);
  }
}

inline const std::uint64_t* BitParallelPattern::eq_row(char32_t c) const {
  std::int32_t idx = 0;
  if (c < 128) {
    idx = ascii_[c];
  } else if (auto it = wide_.find(c); it != wide_.end()) {
    idx = it->second;
  }
  return eq_.data() + static_cast<std::size_t>(idx) * words_;
}

std::size_t BitParallelPattern::distance(std::span<const char32_t> text) const {
  if (length_ == 0) return text.size();

  constexpr std::size_t kStack = 16;
  std::uint64_t vp_stack[kStack], vn_stack[kStack];
  std::vector<std::uint64_t> heap;
  std::uint64_t *vp, *vn;
  if (words_ <= kStack) {
    vp = vp_stack;
    vn = vn_stack;
  } else {
    heap.assign(words_ * 2, 0);
    vp = heap.data();
    vn = heap.data() + words_;
  }
  for (std::size_t b = 0; b < words_; ++b) {
    vp[b] = ~0ULL;
    vn[b] = 0;
  }

  std::size_t score = length_;
  const std::size_t top = words_ - 1;
  const std::uint64_t top_bit = 1ULL << ((length_ - 1) % 64);
  constexpr std::uint64_t kMsb = 1ULL << 63;

  for (char32_t c : text) {
    const std::uint64_t* eq = eq_row(c);
    int h = 1;
    for (std::size_t b = 0; b < top; ++b)
      h = advance_block(vp[b], vn[b], eq[b], h, kMsb);
    score += static_cast<std::size_t>(
        advance_block(vp[top], vn[top], eq[top], h, top_bit));
  }
  return score;
}

// Two texts against the same pattern in lockstep: each text's carry
// chain is serial across blocks, so alternating the two fills the
// pipeline stalls. Returns the first text's score, writes the second's.
std::size_t BitParallelPattern::distance_pair(std::span<const char32_t> ta,
                                              std::span<const char32_t> tb,
                                              std::size_t& score_b,
                                              std::uint64_t* scratch) const {
  std::uint64_t* vpa = scratch;
  std::uint64_t* vna = scratch + words_;
  std::uint64_t* vpb = scratch + 2 * words_;
  std::uint64_t* vnb = scratch + 3 * words_;
  for (std::size_t b = 0; b < words_; ++b) {
    vpa[b] = vpb[b] = ~0ULL;
    vna[b] = vnb[b] = 0;
  }
  std::size_t sa = length_, sb = length_;
  const std::size_t top = words_ - 1;
  const std::uint64_t top_bit = 1ULL << ((length_ - 1) % 64);
  constexpr std::uint64_t kMsb = 1ULL << 63;

  const std::size_t common = std::min(ta.size(), tb.size());
  for (std::size_t i = 0; i < common; ++i) {
    const std::uint64_t* eqa = eq_row(ta[i]);
    const std::uint64_t* eqb = eq_row(tb[i]);
    int ha = 1, hb = 1;
    for (std::size_t b = 0; b < top; ++b) {
      ha = advance_block(vpa[b], vna[b], eqa[b], ha, kMsb);
      hb = advance_block(vpb[b], vnb[b], eqb[b], hb, kMsb);
    }
    sa += static_cast<std::size_t>(
        advance_block(vpa[top], vna[top], eqa[top], ha, top_bit));
    sb += static_cast<std::size_t>(
        advance_block(vpb[top], vnb[top], eqb[top], hb, top_bit));
  }
  for (std::size_t i = common; i < ta.size(); ++i) {
    const std::uint64_t* eq = eq_row(ta[i]);
    int h = 1;
    for (std::size_t b = 0; b < top; ++b)
      h = advance_block(vpa[b], vna[b], eq[b], h, kMsb);
    sa += static_cast<std::size_t>(
        advance_block(vpa[top], vna[top], eq[top], h, top_bit));
  }
  for (std::size_t i = common; i < tb.size(); ++i) {
    const std::uint64_t* eq = eq_row(tb[i]);
    int h = 1;
    for (std::size_t b = 0; b < top; ++b)
      h = advance_block(vpb[b], vnb[b], eq[b], h, kMsb);
    sb += static_cast<std::size_t>(
        advance_block(vpb[top], vnb[top], eq[top], h, top_bit));
  }
  score_b = sb;
  return sa;
}

std::vector<std::size_t> BitParallelPattern::distance_batch(
    std::span<const std::u32string> texts) const {
  std::vector<std::size_t> out(texts.size());
  if (length_ == 0) {
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = texts[i].size();
    return out;
  }
  std::vector<std::uint64_t> scratch(4 * words_);
  std::size_t i = 0;
  for (; i + 1 < texts.size(); i += 2)
    out[i] = distance_pair(texts[i], texts[i + 1], out[i + 1], scratch.data());
  if (i < texts.size()) out[i] = distance(texts[i]);
  return out;
}

std::size_t levenshtein(std::span<const char32_t> a, std::span<const char32_t> b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (a.empty()) return b.size();
  return BitParallelPattern(a).distance(b);
}

std::vector<std::size_t> cross_distances(std::span<const std::u32string> patterns,
                                         std::span<const std::u32string> texts) {
  std::vector<std::size_t> out(patterns.size() * texts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(patterns.size()); ++i) {
    const BitParallelPattern pattern(patterns[static_cast<std::size_t>(i)]);
    const std::vector<std::size_t> row = pattern.distance_batch(texts);
    std::copy(row.begin(), row.end(),
              out.begin() + i * static_cast<std::ptrdiff_t>(texts.size()));
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const std::u32string ua = decode_utf8(a);
  const std::u32string ub = decode_utf8(b);
  return levenshtein(std::span<const char32_t>(ua), std::span<const char32_t>(ub));
}

std::optional<std::size_t> levenshtein_bounded(std::span<const char32_t> a,
                                               std::span<const char32_t> b,
                                               std::size_t limit) {
  if (a.size() > b.size()) std::swap(a, b);
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (n - m > limit) return std::nullopt;
  if (m == 0) return n;  // n <= limit here
  if (limit == 0) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end())
               ? std::optional<std::size_t>(0)
               : std::nullopt;
  }

  // Banded DP over a diagonal window of half-width `limit`; cells
  // outside the band are treated as infinite.
  const std::size_t inf = limit + 1;
  std::vector<std::size_t> prev(n + 2, inf), cur(n + 2, inf);
  for (std::size_t j = 0; j <= std::min(n, limit); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    const std::size_t lo = i > limit ? i - limit : 0;
    const std::size_t hi = std::min(n, i + limit);
    if (lo > 0) cur[lo - 1] = inf;
    std::size_t row_min = inf;
    for (std::size_t j = lo; j <= hi; ++j) {
      std::size_t best;
      if (j == 0) {
        best = i;
      } else {
        best = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
        if (prev[j] + 1 < best) best = prev[j] + 1;
        if (cur[j - 1] + 1 < best) best = cur[j - 1] + 1;
        if (best > inf) best = inf;
      }
      cur[j] = best;
      row_min = std::min(row_min, best);
    }
    cur[hi + 1] = inf;
    if (row_min > limit) return std::nullopt;
    std::swap(prev, cur);
  }
  return prev[n] <= limit ? std::optional<std::size_t>(prev[n]) : std::nullopt;
}

std::optional<std::size_t> levenshtein_bounded(std::string_view a,
                                               std::string_view b,
                                               std::size_t limit) {
  const std::u32string ua = decode_utf8(a);
  const std::u32string ub = decode_utf8(b);
  return levenshtein_bounded(std::span<const char32_t>(ua),
                             std::span<const char32_t>(ub), limit);
}

std::u32string map_tokens(std::span<const std::string> tokens,
                          std::unordered_map<std::string, char32_t>& dict) {
  std::u32string ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) {
    auto [it, fresh] = dict.try_emplace(t, static_cast<char32_t>(dict.size()));
    (void)fresh;
    ids.push_back(it->second);
  }
  return ids;
}

double wer_mapped(std::span<const char32_t> reference,
                  std::span<const char32_t> hypothesis) {
  if (reference.empty()) throw EmptyReference("wer: empty reference");
  return static_cast<double>(levenshtein(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

double wer(std::span<const std::string> reference,
           std::span<const std::string> hypothesis) {
  if (reference.empty()) throw EmptyReference("wer: empty reference");
  std::unordered_map<std::string, char32_t> dict;
  const std::u32string r = map_tokens(reference, dict);
  const std::u32string h = map_tokens(hypothesis, dict);
  return wer_mapped(r, h);
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> corpus_tokens) {
  Vocabulary v;
  for (const auto& doc : corpus_tokens) {
    for (const std::string& t : doc) {
      if (v.index.try_emplace(t, static_cast<std::uint32_t>(v.terms.size())).second)
        v.terms.push_back(t);
    }
  }
  std::uint64_t h = kFnvOffset;
  for (const std::string& t : v.terms) {
    for (char c : t) {
      h ^= static_cast<std::uint8_t>(c);
      h *= kFnvPrime;
    }
    h ^= 0xFF;  // term separator
    h *= kFnvPrime;
  }
  v.ref_id = h;
  return v;
}

BowVector bow_vectorize(std::span<const std::string> tokens, const Vocabulary& vocab) {
  BowVector out;
  out.vocab_ref = vocab.ref_id;
  std::unordered_map<std::uint32_t, std::uint32_t> acc;
  for (const std::string& t : tokens) {
    auto it = vocab.index.find(t);
    if (it != vocab.index.end()) ++acc[it->second];
  }
  out.entries.assign(acc.begin(), acc.end());
  std::sort(out.entries.begin(), out.entries.end());
  return out;
}

double cosine_distance(const BowVector& u, const BowVector& v) {
  if (u.vocab_ref != v.vocab_ref)
    throw VocabularyMismatch("cosine_distance: vectors built from different vocabularies");
  if (u.entries.empty() || v.entries.empty()) return 1.0;
  if (u.entries == v.entries) return 0.0;
  double dot = 0, nu = 0, nv = 0;
  std::size_t i = 0, j = 0;
  while (i < u.entries.size() && j < v.entries.size()) {
    const auto [iu, cu] = u.entries[i];
    const auto [iv, cv] = v.entries[j];
    if (iu == iv) {
      dot += static_cast<double>(cu) * cv;
      ++i;
      ++j;
    } else if (iu < iv) {
      ++i;
    } else {
      ++j;
    }
  }
  for (const auto& [id, c] : u.entries) nu += static_cast<double>(c) * c;
  for (const auto& [id, c] : v.entries) nv += static_cast<double>(c) * c;
  const double sim = dot / (std::sqrt(nu) * std::sqrt(nv));
  return 1.0 - std::clamp(sim, 0.0, 1.0);
}

double manhattan(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionMismatch("manhattan: " + std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()));
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) s += std::abs(u[i] - v[i]);
  return s;
}

double manhattan(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size())
    throw DimensionMismatch("manhattan: " + std::to_string(u.size()) + " vs " +
                            std::to_string(v.size()));
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += std::abs(static_cast<double>(u[i]) - static_cast<double>(v[i]));
  return s;
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const std::string& t : vocab.terms) out << t << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> docs(1);
  std::string line;
  while (std::getline(in, line)) docs[0].push_back(line);
  Vocabulary v = build_vocabulary(docs);
  if (v.terms.size() != docs[0].size())
    throw ParseError(0, "duplicate term in vocabulary file " + path.string());
  return v;
}

}  // namespace lyricmatch
