#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lyricmatch/corpus.hpp"
#include "lyricmatch/rng.hpp"

namespace lyricmatch::testsupport {

// Seeded cover-song corpus: originals drawn from a Zipf-weighted
// vocabulary, covers derived by token substitution, line deletion and
// annotation noise (section tags, filler lines, all-caps styling).
struct SyntheticSpec {
  std::uint64_t seed = 0xC0FFEE;
  std::size_t n_groups = 200;
  std::size_t vocab_words = 500;
  std::size_t min_tokens = 40;
  std::size_t max_tokens = 120;
  std::size_t min_covers = 2;
  std::size_t max_covers = 5;
  double substitution_rate = 0.10;
  double line_deletion_rate = 0.10;
  double caps_cover_rate = 0.15;  // covers published in all caps
  // Steep enough that raw-count cosine suffers from the shared head words
  // while per-group tail words keep the task solvable.
  double zipf_s = 2.05;
  std::size_t words_per_line = 8;
  bool inject_annotations = true;
  // Each group samples only its own 10-word slice of the vocabulary,
  // which makes the groups linearly separable.
  bool disjoint_vocab = false;
};

Corpus make_synthetic_corpus(const SyntheticSpec& spec);

// The deterministic pseudo-word list the generator draws from.
std::string synthetic_word(std::size_t index);

}  // namespace lyricmatch::testsupport
