#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

namespace lyricmatch::reference {

// Plain quadratic dynamic-programming edit distance over 32-bit
// symbols. This is the serial baseline the bit-parallel kernels in
// distance.hpp are tested and benchmarked against.
std::size_t levenshtein_dp(std::span<const char32_t> a,
                           std::span<const char32_t> b);

// UTF-8 convenience wrapper (decodes to scalar values first).
std::size_t levenshtein_dp(std::string_view a, std::string_view b);

}  // namespace lyricmatch::reference
