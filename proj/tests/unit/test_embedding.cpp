#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lyricmatch/embedding.hpp"
#include "lyricmatch/errors.hpp"
#include "lyricmatch/rng.hpp"
#include "lyricmatch/textnorm.hpp"

using namespace lyricmatch;

namespace {

NormalizedLyrics lyr(const std::string& text) { return normalize(text, {}); }

double l2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

HeadParams identity_params(std::uint32_t n) {
  HeadParams p;
  p.dims = {n, n, n, n};
  p.w1 = Matrix(n, n);
  p.w2 = Matrix(n, n);
  p.w3 = Matrix(n, n);
  for (std::uint32_t i = 0; i < n; ++i) {
    p.w1.at(i, i) = 1.0;
    p.w2.at(i, i) = 1.0;
    p.w3.at(i, i) = 1.0;
  }
  p.b1.assign(n, 0.0);
  p.b2.assign(n, 0.0);
  p.b3.assign(n, 0.0);
  return p;
}

}  // namespace

TEST_CASE("extract_features basics") {
  const FeatureScheme scheme;
  // too short for any trigram
  CHECK(l2(extract_features(lyr(""), scheme).values) == 0.0);
  CHECK(l2(extract_features(lyr("ab"), scheme).values) == 0.0);

  const FeatureVector a = extract_features(lyr("hello world again"), scheme);
  const FeatureVector b = extract_features(lyr("hello world again"), scheme);
  CHECK(a.values == b.values);
  CHECK(a.scheme_id == scheme.id());
  CHECK(l2(a.values) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feature hashing of aaaa touches at most two buckets") {
  const FeatureScheme scheme;
  const FeatureVector v = extract_features(lyr("aaaa"), scheme);
  std::size_t nonzero = 0;
  for (double x : v.values)
    if (x != 0.0) ++nonzero;
  // n-gram multiset is {aaa, aaa, aaaa}: two distinct grams
  CHECK(nonzero >= 1);
  CHECK(nonzero <= 2);
  CHECK(l2(v.values) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("changing the scheme changes the vector") {
  const NormalizedLyrics text = lyr("some features here");
  const FeatureScheme base;
  FeatureScheme reseeded = base;
  reseeded.seed ^= 0x1234;
  FeatureScheme window = base;
  window.n_max = 4;
  CHECK(extract_features(text, base).values !=
        extract_features(text, reseeded).values);
  CHECK(extract_features(text, base).values !=
        extract_features(text, window).values);
  CHECK(base.id() != reseeded.id());
  CHECK(base.id() != window.id());
}

TEST_CASE("head_forward on zero and identity parameters") {
  HeadParams zero;
  zero.dims = {8, 4, 3, 2};
  zero.w1 = Matrix(8, 4);
  zero.w2 = Matrix(4, 3);
  zero.w3 = Matrix(3, 2);
  zero.b1.assign(4, 0.0);
  zero.b2.assign(3, 0.0);
  zero.b3.assign(2, 0.0);
  FeatureVector x;
  x.values = {1, -2, 3, 0.5, 0, 0, 1, 1};
  const EmbeddingVector e = head_forward(x, zero);
  CHECK(e == EmbeddingVector(2, 0.0));

  const HeadParams ident = identity_params(4);
  FeatureVector nn;
  nn.values = {0.5, 0.0, 2.0, 1.25};
  CHECK(head_forward(nn, ident) == nn.values);

  FeatureVector wrong;
  wrong.values = {1, 2};
  CHECK_THROWS_AS(head_forward(wrong, ident), DimensionMismatch);
}

TEST_CASE("head_forward is positively homogeneous with zero biases") {
  const HeadDims dims{16, 8, 6, 4};
  HeadParams p = init_params(3, dims);
  auto rng = make_rng(77);
  FeatureVector x;
  x.values.resize(16);
  for (double& v : x.values) v = draw_unit(rng) * 2 - 1;

  const EmbeddingVector base = head_forward(x, p);
  FeatureVector scaled = x;
  for (double& v : scaled.values) v *= 3.0;
  const EmbeddingVector big = head_forward(scaled, p);
  for (std::size_t i = 0; i < base.size(); ++i)
    REQUIRE(big[i] == doctest::Approx(3.0 * base[i]).epsilon(1e-12));
}

TEST_CASE("head_forward stays finite on random inputs") {
  const HeadDims dims{32, 16, 8, 4};
  const HeadParams p = init_params(11, dims);
  auto rng = make_rng(13);
  for (int iter = 0; iter < 100; ++iter) {
    FeatureVector x;
    x.values.resize(32);
    for (double& v : x.values) v = (draw_unit(rng) * 2 - 1) * 100.0;
    for (double v : head_forward(x, p)) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("init_params respects the per-layer bound and the seed") {
  const HeadDims dims{64, 32, 16, 8};
  const HeadParams a = init_params(5, dims);
  const HeadParams b = init_params(5, dims);
  CHECK(a == b);
  const HeadParams c = init_params(6, dims);
  CHECK(a != c);

  auto check_bound = [](const Matrix& w, double fan_in, double fan_out) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double v : w.data) {
      REQUIRE(std::abs(v) <= bound);
    }
  };
  check_bound(a.w1, 64, 32);
  check_bound(a.w2, 32, 16);
  check_bound(a.w3, 16, 8);
  CHECK(a.b1 == std::vector<double>(32, 0.0));
  CHECK(a.b2 == std::vector<double>(16, 0.0));
  CHECK(a.b3 == std::vector<double>(8, 0.0));
}

TEST_CASE("batch forward equals per-row forward at any thread count") {
  const HeadDims dims{24, 12, 8, 6};
  const HeadParams p = init_params(21, dims);
  auto rng = make_rng(22);
  Matrix features(5, 24);
  for (double& v : features.data) v = draw_unit(rng) * 2 - 1;

#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  const Matrix serial = head_forward_batch(features, p);
#ifdef _OPENMP
  omp_set_num_threads(3);
#endif
  const Matrix threaded = head_forward_batch(features, p);
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
  CHECK(serial == threaded);

  for (std::size_t r = 0; r < 5; ++r) {
    FeatureVector x;
    x.values.assign(features.row(r), features.row(r) + 24);
    const EmbeddingVector e = head_forward(x, p);
    for (std::size_t j = 0; j < 6; ++j) REQUIRE(serial.at(r, j) == e[j]);
  }
}

TEST_CASE("feature extraction and forward pass reproduce frozen values") {
  // Guards the hashing scheme and the forward arithmetic against silent
  // numerical drift; regenerate only for a deliberate format break.
  const FeatureScheme scheme{0x60D5, 3, 5, 64};
  const NormalizedLyrics lyrics = normalize(
      "shadows fall across the water\nand the city sleeps alone\n",
      NormalizationConfig{});
  const FeatureVector fv = extract_features(lyrics, scheme);

  double norm2 = 0;
  int nonzero = 0;
  for (double v : fv.values) {
    norm2 += v * v;
    if (v != 0) ++nonzero;
  }
  CHECK(nonzero == 48);
  CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> fv_head = {
      0.071066905451870152,  -0.071066905451870152, 0.071066905451870152, 0,
      0.21320071635561044,   0,
      -0.071066905451870152, 0.071066905451870152};
  for (std::size_t i = 0; i < fv_head.size(); ++i)
    REQUIRE(fv.values[i] == doctest::Approx(fv_head[i]).epsilon(1e-12));

  const HeadParams p = init_params(0xE5E5, HeadDims{64, 16, 8, 4});
  const EmbeddingVector e = head_forward(fv, p);
  const std::vector<double> expected = {
      -0.05147016396466994, -0.068646186095906322, 0.039511593259737819,
      -0.12246820745800546};
  REQUIRE(e.size() == expected.size());
  for (std::size_t i = 0; i < e.size(); ++i)
    REQUIRE(e[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("head file round trip is byte identical") {
  const HeadDims dims{32, 16, 8, 4};
  const HeadParams p = init_params(9, dims);
  const FeatureScheme scheme{0xABCD, 3, 5, 32};

  const std::vector<std::uint8_t> once = serialize_head(p, scheme);
  const auto dir = std::filesystem::temp_directory_path() / "lyricmatch_head_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "head.bin";
  save_head(p, scheme, path);

  const auto [p2, s2] = load_head(path);
  CHECK(s2 == scheme);
  // parameters are stored as f32, so the loaded head is the rounded
  // original and from then on survives reload exactly
  auto rounded = [](const std::vector<double>& xs) {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      out[i] = static_cast<double>(static_cast<float>(xs[i]));
    return out;
  };
  CHECK(p2.w1.data == rounded(p.w1.data));
  CHECK(p2.b1 == rounded(p.b1));
  CHECK(p2.w2.data == rounded(p.w2.data));
  CHECK(p2.b2 == rounded(p.b2));
  CHECK(p2.w3.data == rounded(p.w3.data));
  CHECK(p2.b3 == rounded(p.b3));
  save_head(p2, s2, path);
  const auto [p3, s3] = load_head(path);
  CHECK(p3 == p2);
  CHECK(serialize_head(p2, s2) == once);
  CHECK(head_fingerprint(p, scheme) == head_fingerprint(p2, s2));

  HeadParams tweaked = p;
  tweaked.b3[0] += 0.25;
  CHECK(head_fingerprint(tweaked, scheme) != head_fingerprint(p, scheme));

  // corrupt the magic
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(0);
  f.put('X');
  f.close();
  CHECK_THROWS_AS(load_head(path), IoError);

  // truncated payload
  const auto short_path = dir / "short.bin";
  std::ofstream out(short_path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(once.data()),
            static_cast<std::streamsize>(once.size() / 2));
  out.close();
  CHECK_THROWS_AS(load_head(short_path), IoError);
  std::filesystem::remove_all(dir);
}
