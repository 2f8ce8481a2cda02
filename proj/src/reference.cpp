#include "lyricmatch/reference.hpp"

#include <algorithm>
#include <vector>

#include "lyricmatch/utf8.hpp"

namespace lyricmatch::reference {

std::size_t levenshtein_dp(std::span<const char32_t> a,
                           std::span<const char32_t> b) {
  const std::size_t m = a.size();
  const std::size_t n = b.size();
  if (m == 0) return n;
  if (n == 0) return m;
  std::vector<std::size_t> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= m; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

std::size_t levenshtein_dp(std::string_view a, std::string_view b) {
  const std::u32string ua = decode_utf8(a);
  const std::u32string ub = decode_utf8(b);
  return levenshtein_dp(std::span<const char32_t>(ua),
                        std::span<const char32_t>(ub));
}

}  // namespace lyricmatch::reference
