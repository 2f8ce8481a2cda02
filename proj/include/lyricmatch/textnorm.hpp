#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lyricmatch {

struct NormalizationConfig {
  bool strip_section_tags = true;
  bool drop_filler_lines = true;
  bool lowercase = true;
  bool unicode_fold = true;
  bool collapse_whitespace = true;
  // Punctuation replacement is a pipeline stage like the others, so it
  // gets a switch too; with every flag false normalize() is the identity.
  bool strip_punctuation = true;
  std::vector<std::string> filler_patterns = {"uh",  "oh",  "ah",  "la", "na",
                                              "yeah", "hey", "ooh", "mmm"};
};

struct NormalizedLyrics {
  std::string text;
  std::vector<std::string> tokens;
};

// Cleaning pipeline, applied in order: unicode fold, section-tag
// removal, lowercasing, filler-line drop, punctuation to spaces,
// whitespace collapse. Total and deterministic.
NormalizedLyrics normalize(std::string_view raw, const NormalizationConfig& config);

// Stage helpers exposed for tests.
namespace textdetail {
std::u32string fold_scalars(std::u32string_view in);
std::u32string strip_tags(std::u32string_view in);
std::u32string lowercase_scalars(std::u32string_view in);
bool is_space_scalar(char32_t c);
bool is_word_scalar(char32_t c);
}  // namespace textdetail

}  // namespace lyricmatch
