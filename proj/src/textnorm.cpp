#include "lyricmatch/textnorm.hpp"

#include <algorithm>
#include <set>

#include "lyricmatch/utf8.hpp"

namespace lyricmatch {
namespace textdetail {

bool is_space_scalar(char32_t c) {
  switch (c) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\v':
    case U'\f':
    case 0x00A0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

namespace {

// Latin Extended-A (U+0100..U+017F) to ASCII. Digraph entries spelled
// out; everything else is a one-character base letter.
const char* const kExtA[128] = {
    "A", "a", "A", "a", "A", "a", "C", "c", "C", "c", "C", "c", "C", "c",
    "D", "d", "D", "d", "E", "e", "E", "e", "E", "e", "E", "e", "E", "e",
    "G", "g", "G", "g", "G", "g", "G", "g", "H", "h", "H", "h", "I", "i",
    "I", "i", "I", "i", "I", "i", "I", "i", "IJ", "ij", "J", "j", "K", "k",
    "k", "L", "l", "L", "l", "L", "l", "L", "l", "L", "l", "N", "n", "N",
    "n", "N", "n", "n", "N", "n", "O", "o", "O", "o", "O", "o", "OE", "oe",
    "R", "r", "R", "r", "R", "r", "S", "s", "S", "s", "S", "s", "S", "s",
    "T", "t", "T", "t", "T", "t", "U", "u", "U", "u", "U", "u", "U", "u",
    "U", "u", "U", "u", "W", "w", "Y", "y", "Y", "Z", "z", "Z", "z", "Z",
    "z", "s"};

// Latin-1 letters (U+00C0..U+00FF) to ASCII; 0 means keep as-is.
const char* const kLatin1[64] = {
    "A", "A", "A", "A", "A", "A", "AE", "C", "E", "E", "E", "E", "I", "I",
    "I", "I", "D", "N", "O", "O", "O", "O", "O", nullptr /*×*/, "O", "U",
    "U", "U", "U", "Y", "TH", "ss", "a", "a", "a", "a", "a", "a", "ae", "c",
    "e", "e", "e", "e", "i", "i", "i", "i", "d", "n", "o", "o", "o", "o",
    "o", nullptr /*÷*/, "o", "u", "u", "u", "u", "y", "th", "y"};

void fold_one(char32_t c, std::u32string& out) {
  if (c < 0x80) {
    out.push_back(c);
    return;
  }
  if (c == 0x00A0 || c == 0x3000) {
    out.push_back(U' ');
    return;
  }
  if (c == 0x00AA) {
    out.push_back(U'a');
    return;
  }
  if (c == 0x00BA) {
    out.push_back(U'o');
    return;
  }
  if (c >= 0x00C0 && c <= 0x00FF) {
    if (const char* rep = kLatin1[c - 0x00C0]) {
      for (const char* p = rep; *p; ++p) out.push_back(static_cast<char32_t>(*p));
      return;
    }
    out.push_back(c);
    return;
  }
  if (c >= 0x0100 && c <= 0x017F) {
    for (const char* p = kExtA[c - 0x0100]; *p; ++p)
      out.push_back(static_cast<char32_t>(*p));
    return;
  }
  switch (c) {
    case 0x2018:
    case 0x2019:
    case 0x201A:
    case 0x2032:
    case 0x00B4:
      out.push_back(U'\'');
      return;
    case 0x201C:
    case 0x201D:
    case 0x201E:
    case 0x2033:
      out.push_back(U'"');
      return;
    case 0x2010:
    case 0x2011:
    case 0x2012:
    case 0x2013:
    case 0x2014:
    case 0x2015:
    case 0x2212:
      out.push_back(U'-');
      return;
    case 0x2026:
      out.append(U"...");
      return;
    case 0x2044:
      out.push_back(U'/');
      return;
    default:
      break;
  }
  if (c >= 0xFF01 && c <= 0xFF5E) {
    out.push_back(c - 0xFEE0);
    return;
  }
  if (is_space_scalar(c)) {
    out.push_back(U' ');
    return;
  }
  out.push_back(c);
}

}  // namespace

std::u32string fold_scalars(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  for (char32_t c : in) fold_one(c, out);
  return out;
}

std::u32string strip_tags(std::u32string_view in) {
  // Deletes [..] spans without nesting; an unterminated '[' deletes to
  // the end of its line.
  std::u32string out;
  out.reserve(in.size());
  std::size_t i = 0;
  while (i < in.size()) {
    if (in[i] != U'[') {
      out.push_back(in[i]);
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < in.size() && in[j] != U']' && in[j] != U'\n') ++j;
    if (j < in.size() && in[j] == U']') {
      i = j + 1;
    } else {
      i = j;  // keep the newline itself, if any
    }
  }
  return out;
}

std::u32string lowercase_scalars(std::u32string_view in) {
  std::u32string out(in);
  for (char32_t& c : out) {
    if (c >= U'A' && c <= U'Z') {
      c += 0x20;
    } else if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) {
      c += 0x20;
    }
  }
  return out;
}

bool is_word_scalar(char32_t c) {
  if (c < 0x80) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
           (c >= U'0' && c <= U'9');
  }
  if (is_space_scalar(c)) return false;
  // General punctuation, supplemental punctuation, CJK symbols,
  // fullwidth punctuation, and the Latin-1 symbol range.
  if (c >= 0x2000 && c <= 0x206F) return false;
  if (c >= 0x2E00 && c <= 0x2E7F) return false;
  if (c >= 0x3000 && c <= 0x303F) return false;
  if (c >= 0x00A1 && c <= 0x00BF && c != 0x00AA && c != 0x00BA) return false;
  if (c == 0x00D7 || c == 0x00F7) return false;
  if (c >= 0xFF01 && c <= 0xFF0F) return false;
  if (c >= 0xFF1A && c <= 0xFF20) return false;
  if (c >= 0xFF3B && c <= 0xFF40) return false;
  if (c >= 0xFF5B && c <= 0xFF5E) return false;
  return true;
}

}  // namespace textdetail

namespace {

using textdetail::is_space_scalar;
using textdetail::is_word_scalar;

std::vector<std::u32string> split_lines(std::u32string_view in) {
  std::vector<std::u32string> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= in.size(); ++i) {
    if (i == in.size() || in[i] == U'\n') {
      lines.emplace_back(in.substr(start, i - start));
      start = i + 1;
    }
  }
  return lines;
}

bool line_is_filler(const std::u32string& line,
                    const std::set<std::u32string>& filler) {
  // A line counts as filler when, after punctuation goes to spaces,
  // every token is on the filler list (no tokens at all counts too).
  std::u32string token;
  bool any = true;
  auto flush = [&]() {
    if (token.empty()) return true;
    const bool ok = filler.count(token) > 0;
    token.clear();
    return ok;
  };
  for (char32_t c : line) {
    if (is_word_scalar(c)) {
      token.push_back(c);
    } else {
      any = flush();
      if (!any) return false;
    }
  }
  return flush();
}

}  // namespace

NormalizedLyrics normalize(std::string_view raw, const NormalizationConfig& config) {
  std::u32string s = decode_utf8(raw);
  if (config.unicode_fold) s = textdetail::fold_scalars(s);
  if (config.strip_section_tags) s = textdetail::strip_tags(s);
  if (config.lowercase) s = textdetail::lowercase_scalars(s);

  if (config.drop_filler_lines) {
    std::set<std::u32string> filler;
    for (const std::string& pat : config.filler_patterns)
      filler.insert(decode_utf8(pat));
    std::u32string kept;
    bool first = true;
    for (const std::u32string& line : split_lines(s)) {
      if (line_is_filler(line, filler)) continue;
      if (!first) kept.push_back(U'\n');
      kept += line;
      first = false;
    }
    s = std::move(kept);
  }

  if (config.strip_punctuation) {
    for (char32_t& c : s) {
      if (!is_space_scalar(c) && !is_word_scalar(c)) c = U' ';
    }
  }

  if (config.collapse_whitespace) {
    std::u32string collapsed;
    collapsed.reserve(s.size());
    for (char32_t c : s) {
      if (is_space_scalar(c)) {
        if (!collapsed.empty() && collapsed.back() != U' ')
          collapsed.push_back(U' ');
      } else {
        collapsed.push_back(c);
      }
    }
    while (!collapsed.empty() && collapsed.back() == U' ') collapsed.pop_back();
    s = std::move(collapsed);
  }

  NormalizedLyrics out;
  out.text = encode_utf8(s);
  std::u32string token;
  for (char32_t c : s) {
    if (is_space_scalar(c)) {
      if (!token.empty()) {
        out.tokens.push_back(encode_utf8(token));
        token.clear();
      }
    } else {
      token.push_back(c);
    }
  }
  if (!token.empty()) out.tokens.push_back(encode_utf8(token));
  return out;
}

}  // namespace lyricmatch
