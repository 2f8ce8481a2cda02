// Timing harness: serial reference DP vs the bit-parallel kernel, and
// single-thread vs OpenMP batch scoring. Run with --pairs/--len to resize.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lyricmatch/distance.hpp"
#include "lyricmatch/embedding.hpp"
#include "lyricmatch/reference.hpp"
#include "lyricmatch/rng.hpp"

namespace lm = lyricmatch;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::u32string random_text(std::mt19937_64& rng, std::size_t len) {
  static const std::u32string alphabet =
      U"abcdefghijklmnopqrstuvwxyz      ";
  std::u32string s;
  s.reserve(len);
  for (std::size_t i = 0; i < len; ++i)
    s.push_back(alphabet[lm::draw_below(rng, alphabet.size())]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_texts = 1000;
  std::size_t n_patterns = 100;
  std::size_t len = 1000;
  std::size_t dp_pairs = 200;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    const std::size_t value = std::strtoull(argv[i + 1], nullptr, 10);
    if (flag == "--texts") n_texts = value;
    else if (flag == "--patterns") n_patterns = value;
    else if (flag == "--len") len = value;
    else if (flag == "--dp-pairs") dp_pairs = value;
  }

  std::mt19937_64 rng = lm::make_rng(42);
  std::vector<std::u32string> texts(n_texts);
  for (auto& t : texts) t = random_text(rng, len);
  std::vector<std::u32string> patterns(n_patterns);
  for (auto& p : patterns) p = random_text(rng, len);

  std::printf("corpus: %zu texts x %zu patterns, length %zu\n\n", n_texts,
              n_patterns, len);

  // 1. reference DP vs bit-parallel, same pairs
  {
    std::uint64_t sink = 0;
    auto t0 = Clock::now();
    for (std::size_t i = 0; i < dp_pairs; ++i)
      sink += static_cast<std::uint64_t>(lm::reference::levenshtein_dp(
          texts[i % n_texts], patterns[i % n_patterns]));
    const double dp_s = seconds_since(t0);

    std::uint64_t sink2 = 0;
    t0 = Clock::now();
    for (std::size_t i = 0; i < dp_pairs; ++i)
      sink2 += static_cast<std::uint64_t>(
          lm::levenshtein(texts[i % n_texts], patterns[i % n_patterns]));
    const double bp_s = seconds_since(t0);

    if (sink != sink2) {
      std::fprintf(stderr, "kernel mismatch: dp=%llu bp=%llu\n",
                   static_cast<unsigned long long>(sink),
                   static_cast<unsigned long long>(sink2));
      return 1;
    }
    std::printf("reference DP   %8.3f s  (%zu pairs, %.1f pairs/s)\n", dp_s,
                dp_pairs, dp_pairs / dp_s);
    std::printf("bit-parallel   %8.3f s  (%zu pairs, %.1f pairs/s, %.1fx)\n\n",
                bp_s, dp_pairs, dp_pairs / bp_s, dp_s / bp_s);
  }

  // 2. all-pairs batch kernel: 1 thread vs all threads
  auto batch_run = [&](int threads) {
#ifdef _OPENMP
    omp_set_num_threads(threads);
#else
    (void)threads;
#endif
    auto t0 = Clock::now();
    const std::vector<std::size_t> out = lm::cross_distances(patterns, texts);
    const double s = seconds_since(t0);
    std::uint64_t checksum = 0;
    for (std::size_t v : out) checksum = checksum * 31 + v;
    return std::pair<double, std::uint64_t>(s, checksum);
  };

  int max_threads = 1;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif
  const auto [serial_s, serial_sum] = batch_run(1);
  std::printf("batch 1 thread  %8.3f s  (%.0f pairs/s)\n", serial_s,
              n_texts * n_patterns / serial_s);
  if (max_threads > 1) {
    const auto [par_s, par_sum] = batch_run(max_threads);
    std::printf("batch %d threads %7.3f s  (%.0f pairs/s, %.2fx)\n",
                max_threads, par_s, n_texts * n_patterns / par_s,
                serial_s / par_s);
    if (serial_sum != par_sum) {
      std::fprintf(stderr, "checksum mismatch across thread counts\n");
      return 1;
    }
  }

  // 3. forward pass: 1 thread vs all threads
  {
    lm::HeadDims dims;
    const lm::HeadParams params = lm::init_params(3, dims);
    const std::size_t batch = 256;
    lm::Matrix features(batch, dims.f);
    for (double& v : features.data) v = lm::draw_unit(rng) - 0.5;

    auto fwd = [&](int threads) {
#ifdef _OPENMP
      omp_set_num_threads(threads);
#endif
      auto t0 = Clock::now();
      const lm::Matrix emb = lm::head_forward_batch(features, params);
      const double s = seconds_since(t0);
      return std::pair<double, double>(s, emb.data[0]);
    };
    const auto [s1, v1] = fwd(1);
    std::printf("\nforward 1 thread  %7.3f s  (batch %zu)\n", s1, batch);
    if (max_threads > 1) {
      const auto [sN, vN] = fwd(max_threads);
      std::printf("forward %d threads %6.3f s  (%.2fx)\n", max_threads, sN,
                  s1 / sN);
      if (v1 != vN) {
        std::fprintf(stderr, "forward mismatch across thread counts\n");
        return 1;
      }
    }
  }
  return 0;
}
