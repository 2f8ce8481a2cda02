#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lyricmatch/textnorm.hpp"

namespace lyricmatch {

// Row-major dense matrix of doubles; the only numeric container the
// model code uses.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool operator==(const Matrix&) const = default;
};

// Frozen featurizer: seeded signed hashing of character n-grams.
struct FeatureScheme {
  std::uint64_t seed = 0x6C79726963ULL;
  std::uint32_t n_min = 3;
  std::uint32_t n_max = 5;
  std::uint32_t dim = 4096;

  std::uint64_t id() const;
  bool operator==(const FeatureScheme&) const = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::uint64_t scheme_id = 0;
};

struct HeadDims {
  std::uint32_t f = 4096;
  std::uint32_t h1 = 512;
  std::uint32_t h2 = 256;
  std::uint32_t e = 128;
  bool operator==(const HeadDims&) const = default;
};

// Two hidden relu layers and a linear embedding output.
struct HeadParams {
  HeadDims dims;
  Matrix w1, w2, w3;               // f x h1, h1 x h2, h2 x e
  std::vector<double> b1, b2, b3;  // h1, h2, e

  bool operator==(const HeadParams&) const = default;
};

using EmbeddingVector = std::vector<double>;

FeatureVector extract_features(const NormalizedLyrics& lyrics,
                               const FeatureScheme& scheme);

EmbeddingVector head_forward(const FeatureVector& x, const HeadParams& p);

// Glorot-uniform weights, zero biases.
HeadParams init_params(std::uint64_t seed, const HeadDims& dims);

// Batch forward used by training and indexing. `features` is B x F;
// returns B x E. Parallelizes over disjoint output columns, so the
// result is identical at every thread count.
Matrix head_forward_batch(const Matrix& features, const HeadParams& p);

// LYRHEAD1 binary format: params plus the feature scheme that feeds them.
std::vector<std::uint8_t> serialize_head(const HeadParams& p, const FeatureScheme& s);
void save_head(const HeadParams& p, const FeatureScheme& s,
               const std::filesystem::path& path);
std::pair<HeadParams, FeatureScheme> load_head(const std::filesystem::path& path);

// Fingerprint of the serialized head, stored in index files so a rank
// call can detect a head/index mismatch.
std::uint64_t head_fingerprint(const HeadParams& p, const FeatureScheme& s);

}  // namespace lyricmatch
