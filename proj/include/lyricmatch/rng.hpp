#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace lyricmatch {

// splitmix64; used to spread user seeds and to derive per-fold and
// per-epoch streams so nearby seeds do not produce correlated state.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x1234567));
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

// Bounded draw via 128-bit multiply. std::uniform_int_distribution is
// implementation-defined, so results would not be reproducible across
// standard libraries.
inline std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double draw_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t draw_range(std::mt19937_64& rng, std::uint64_t lo,
                                std::uint64_t hi) {
  return lo + draw_below(rng, hi - lo + 1);
}

template <typename T>
void shuffle_in_place(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(draw_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace lyricmatch
