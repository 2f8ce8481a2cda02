#include "synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace lyricmatch::testsupport {

namespace {

constexpr const char* kSyllables[] = {
    "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
    "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
    "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
    "ra", "re", "ri", "ro", "ru", "sa", "se", "si", "so", "su",
    "ta", "te", "ti", "to", "tu", "va", "ve", "vi", "vo", "vu"};
constexpr std::size_t kSyllableCount = sizeof(kSyllables) / sizeof(kSyllables[0]);

// Zipf-weighted draw over vocabulary indices; frequency rank is
// decoupled from word identity by a seeded permutation.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double s, std::mt19937_64& rng) : perm_(n) {
    cdf_.resize(n);
    double total = 0;
    for (std::size_t r = 0; r < n; ++r) {
      total += std::pow(static_cast<double>(r + 1), -s);
      cdf_[r] = total;
    }
    for (double& c : cdf_) c /= total;
    for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<std::uint32_t>(i);
    shuffle_in_place(perm_, rng);
  }

  std::size_t draw(std::mt19937_64& rng) const {
    const double u = draw_unit(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t rank =
        std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    return perm_[rank];
  }

 private:
  std::vector<double> cdf_;
  std::vector<std::uint32_t> perm_;
};

const std::vector<std::string> kFillerLines = {
    "oh oh oh oh",  "la la la la la", "na na na na", "yeah yeah yeah",
    "ooh ooh ooh",  "mmm mmm",        "hey hey hey", "uh uh uh uh",
};

const std::vector<std::string> kCoverTags = {
    "[verse]", "[VERSE 1]", "[chorus x2]", "[Refrain]", "[bridge]", "[intro]",
};

std::string capitalize(std::string line) {
  if (!line.empty()) line[0] = static_cast<char>(std::toupper(line[0]));
  return line;
}

std::string to_upper(std::string text) {
  for (char& c : text) c = static_cast<char>(std::toupper(c));
  return text;
}

std::string join_words(const std::vector<std::size_t>& words, std::size_t begin,
                       std::size_t end) {
  std::string line;
  for (std::size_t i = begin; i < end; ++i) {
    if (!line.empty()) line += ' ';
    line += synthetic_word(words[i]);
  }
  return line;
}

std::vector<std::string> split_lines(const std::vector<std::size_t>& words,
                                     std::size_t per_line) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < words.size(); i += per_line)
    lines.push_back(join_words(words, i, std::min(i + per_line, words.size())));
  return lines;
}

}  // namespace

std::string synthetic_word(std::size_t index) {
  std::string w;
  w += kSyllables[(index / (kSyllableCount * kSyllableCount)) % kSyllableCount];
  w += kSyllables[(index / kSyllableCount) % kSyllableCount];
  w += kSyllables[index % kSyllableCount];
  return w;
}

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  std::mt19937_64 rng = make_rng(mix_seed(spec.seed, 0x5E11ED));
  const ZipfSampler zipf(spec.vocab_words, spec.zipf_s, rng);

  auto draw_word = [&](std::size_t group) -> std::size_t {
    if (spec.disjoint_vocab) {
      const std::size_t slice = 10;
      const std::size_t base = (group * slice) % spec.vocab_words;
      return base + draw_below(rng, slice);
    }
    return zipf.draw(rng);
  };

  std::vector<SongRecord> records;
  for (std::size_t g = 0; g < spec.n_groups; ++g) {
    const std::size_t n_tokens = draw_range(
        rng, static_cast<std::uint64_t>(spec.min_tokens),
        static_cast<std::uint64_t>(spec.max_tokens));
    std::vector<std::size_t> tokens(n_tokens);
    for (std::size_t& t : tokens) t = draw_word(g);

    const std::string gid = "orig-" + std::to_string(g);
    SongRecord orig;
    orig.id = gid;
    orig.title = "song " + std::to_string(g);
    orig.artist = "artist " + std::to_string(g % 37);
    orig.role = Role::Original;
    if (g % 7 == 0) orig.language = "en";
    {
      const std::vector<std::string> lines =
          split_lines(tokens, spec.words_per_line);
      std::string text;
      for (std::size_t li = 0; li < lines.size(); ++li) {
        if (spec.inject_annotations) {
          if (li == 0) text += "[Verse 1]\n";
          if (li == lines.size() / 2 && lines.size() > 1) text += "[Chorus]\n";
        }
        text += capitalize(lines[li]);
        text += '\n';
      }
      orig.lyrics = text;
    }
    records.push_back(std::move(orig));

    const std::size_t n_covers = draw_range(
        rng, static_cast<std::uint64_t>(spec.min_covers),
        static_cast<std::uint64_t>(spec.max_covers));
    for (std::size_t c = 0; c < n_covers; ++c) {
      std::vector<std::size_t> cover_tokens = tokens;
      for (std::size_t& t : cover_tokens) {
        if (draw_unit(rng) < spec.substitution_rate) {
          const std::size_t partner = t ^ 1ULL;
          if (partner < spec.vocab_words) t = partner;
        }
      }
      std::vector<std::string> lines =
          split_lines(cover_tokens, spec.words_per_line);
      std::vector<std::string> kept;
      for (std::string& line : lines) {
        if (draw_unit(rng) >= spec.line_deletion_rate)
          kept.push_back(std::move(line));
      }
      if (kept.empty()) kept.push_back(std::move(lines.front()));

      std::string text;
      if (spec.inject_annotations)
        text += kCoverTags[draw_below(rng, kCoverTags.size())] + "\n";
      const std::size_t n_filler =
          spec.inject_annotations ? 1 + draw_below(rng, 3) : 0;
      std::vector<std::size_t> filler_at(n_filler);
      for (std::size_t& pos : filler_at) pos = draw_below(rng, kept.size() + 1);
      for (std::size_t li = 0; li <= kept.size(); ++li) {
        for (std::size_t fi = 0; fi < n_filler; ++fi) {
          if (filler_at[fi] == li)
            text += kFillerLines[draw_below(rng, kFillerLines.size())] + "\n";
        }
        if (li < kept.size()) {
          if (spec.inject_annotations && li == kept.size() / 2 && kept.size() > 1)
            text += "[chorus]\n";
          text += kept[li];
          text += '\n';
        }
      }
      if (draw_unit(rng) < spec.caps_cover_rate) text = to_upper(text);

      SongRecord cover;
      cover.id = gid + "-c" + std::to_string(c);
      cover.title = "song " + std::to_string(g) + " (cover)";
      cover.artist = "artist " + std::to_string((g * 7 + c + 1) % 53) + "b";
      cover.lyrics = std::move(text);
      cover.role = Role::Cover;
      cover.original_id = gid;
      if ((g + c) % 11 == 0) cover.language = "en";
      records.push_back(std::move(cover));
    }
  }
  return finalize_corpus(std::move(records));
}

}  // namespace lyricmatch::testsupport
