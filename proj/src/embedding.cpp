#include "lyricmatch/embedding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lyricmatch/distance.hpp"
#include "lyricmatch/errors.hpp"
#include "lyricmatch/rng.hpp"
#include "lyricmatch/utf8.hpp"

namespace lyricmatch {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv_u32(std::uint64_t h, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) {
    h ^= (v >> s) & 0xFF;
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t fnv_u64(std::uint64_t h, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) {
    h ^= (v >> s) & 0xFF;
    h *= kFnvPrime;
  }
  return h;
}

// Runs `fn(lo, hi)` over a disjoint column partition. Each output
// column is owned by exactly one thread and filled in a fixed order,
// so results do not depend on the thread count.
template <typename Fn>
void for_column_tiles(std::size_t cols, Fn&& fn) {
#ifdef _OPENMP
#pragma omp parallel
  {
    const auto t = static_cast<std::size_t>(omp_get_thread_num());
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const std::size_t lo = cols * t / nt;
    const std::size_t hi = cols * (t + 1) / nt;
    if (lo < hi) fn(lo, hi);
  }
#else
  fn(0, cols);
#endif
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
  return t;
}

// dst = src * w + bias (+ optional relu), src B x R, w R x C.
void affine_forward(const Matrix& src, const Matrix& w,
                    std::span<const double> bias, Matrix& dst, bool apply_relu) {
  const std::size_t b = src.rows, r = src.cols, c = w.cols;
  dst = Matrix(b, c);
  const Matrix st = transpose(src);
  for_column_tiles(c, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = 0; i < b; ++i) {
      double* out = dst.row(i);
      for (std::size_t j = lo; j < hi; ++j) out[j] = bias[j];
    }
    for (std::size_t k = 0; k < r; ++k) {
      const double* xk = st.row(k);
      const double* wk = w.row(k);
      for (std::size_t i = 0; i < b; ++i) {
        const double xi = xk[i];
        if (xi == 0.0) continue;
        double* out = dst.row(i);
        for (std::size_t j = lo; j < hi; ++j) out[j] += xi * wk[j];
      }
    }
    if (apply_relu) {
      for (std::size_t i = 0; i < b; ++i) {
        double* out = dst.row(i);
        for (std::size_t j = lo; j < hi; ++j) out[j] = std::max(out[j], 0.0);
      }
    }
  });
}

void write_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back((v >> s) & 0xFF);
}

void write_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 0; s < 64; s += 8) out.push_back((v >> s) & 0xFF);
}

void write_f32(std::vector<std::uint8_t>& out, double v) {
  write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class ByteReader {
 public:
  ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= static_cast<std::uint32_t>(p_[i_++]) << s;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= static_cast<std::uint64_t>(p_[i_++]) << s;
    return v;
  }
  double f32() { return std::bit_cast<float>(u32()); }
  void bytes(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, p_ + i_, n);
    i_ += n;
  }
  bool exhausted() const { return i_ == n_; }

 private:
  void need(std::size_t n) const {
    if (i_ + n > n_) throw IoError("truncated head file");
  }
  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t i_ = 0;
};

constexpr char kHeadMagic[9] = "LYRHEAD1";

}  // namespace

std::uint64_t FeatureScheme::id() const {
  std::uint64_t h = kFnvOffset;
  h = fnv_u64(h, seed);
  h = fnv_u32(h, n_min);
  h = fnv_u32(h, n_max);
  h = fnv_u32(h, dim);
  return h;
}

FeatureVector extract_features(const NormalizedLyrics& lyrics,
                               const FeatureScheme& scheme) {
  FeatureVector out;
  out.scheme_id = scheme.id();
  out.values.assign(scheme.dim, 0.0);
  const std::u32string text = decode_utf8(lyrics.text);
  const std::size_t n = text.size();

  std::uint64_t base = kFnvOffset;
  base = fnv_u64(base, scheme.seed);

  for (std::size_t i = 0; i + scheme.n_min <= n; ++i) {
    std::uint64_t h = base;
    std::size_t len = 0;
    const std::size_t max_len = std::min<std::size_t>(scheme.n_max, n - i);
    while (len < max_len) {
      h = fnv_u32(h, static_cast<std::uint32_t>(text[i + len]));
      ++len;
      if (len >= scheme.n_min) {
        const auto bucket = static_cast<std::size_t>(h % scheme.dim);
        out.values[bucket] += (h >> 63) ? -1.0 : 1.0;
      }
    }
  }

  double norm2 = 0;
  for (double v : out.values) norm2 += v * v;
  if (norm2 > 0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : out.values) v *= inv;
  }
  return out;
}

EmbeddingVector head_forward(const FeatureVector& x, const HeadParams& p) {
  if (x.values.size() != p.dims.f)
    throw DimensionMismatch("head_forward: feature dim " +
                            std::to_string(x.values.size()) + " vs F=" +
                            std::to_string(p.dims.f));
  Matrix in(1, p.dims.f);
  std::copy(x.values.begin(), x.values.end(), in.data.begin());
  Matrix out = head_forward_batch(in, p);
  return EmbeddingVector(out.data.begin(), out.data.end());
}

Matrix head_forward_batch(const Matrix& features, const HeadParams& p) {
  if (features.cols != p.dims.f)
    throw DimensionMismatch("head_forward_batch: feature dim " +
                            std::to_string(features.cols) + " vs F=" +
                            std::to_string(p.dims.f));
  Matrix z1, z2, e;
  affine_forward(features, p.w1, p.b1, z1, true);
  affine_forward(z1, p.w2, p.b2, z2, true);
  affine_forward(z2, p.w3, p.b3, e, false);
  return e;
}

HeadParams init_params(std::uint64_t seed, const HeadDims& dims) {
  HeadParams p;
  p.dims = dims;
  auto glorot = [&](Matrix& w, std::size_t fan_in, std::size_t fan_out,
                    std::uint64_t stream) {
    w = Matrix(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::mt19937_64 rng = make_rng(mix_seed(seed, stream));
    for (double& v : w.data) v = (2.0 * draw_unit(rng) - 1.0) * bound;
  };
  glorot(p.w1, dims.f, dims.h1, 1);
  glorot(p.w2, dims.h1, dims.h2, 2);
  glorot(p.w3, dims.h2, dims.e, 3);
  p.b1.assign(dims.h1, 0.0);
  p.b2.assign(dims.h2, 0.0);
  p.b3.assign(dims.e, 0.0);
  return p;
}

std::vector<std::uint8_t> serialize_head(const HeadParams& p, const FeatureScheme& s) {
  if (s.dim != p.dims.f)
    throw DimensionMismatch("feature scheme dim " + std::to_string(s.dim) +
                            " does not match head F=" + std::to_string(p.dims.f));
  std::vector<std::uint8_t> out;
  out.reserve(32 + 4 * (p.w1.data.size() + p.w2.data.size() + p.w3.data.size() +
                        p.b1.size() + p.b2.size() + p.b3.size()));
  out.insert(out.end(), kHeadMagic, kHeadMagic + 8);
  write_u32(out, p.dims.f);
  write_u32(out, p.dims.h1);
  write_u32(out, p.dims.h2);
  write_u32(out, p.dims.e);
  write_u64(out, s.seed);
  write_u32(out, s.n_min);
  write_u32(out, s.n_max);
  for (const auto* part :
       {&p.w1.data, &p.b1, &p.w2.data, &p.b2, &p.w3.data, &p.b3}) {
    for (double v : *part) write_f32(out, v);
  }
  return out;
}

void save_head(const HeadParams& p, const FeatureScheme& s,
               const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_head(p, s);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<HeadParams, FeatureScheme> load_head(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  ByteReader r(bytes.data(), bytes.size());
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kHeadMagic, 8) != 0)
    throw IoError("not a head file: " + path.string());
  HeadParams p;
  p.dims.f = r.u32();
  p.dims.h1 = r.u32();
  p.dims.h2 = r.u32();
  p.dims.e = r.u32();
  FeatureScheme s;
  s.seed = r.u64();
  s.n_min = r.u32();
  s.n_max = r.u32();
  s.dim = p.dims.f;
  if (p.dims.f == 0 || p.dims.h1 == 0 || p.dims.h2 == 0 || p.dims.e == 0)
    throw IoError("zero dimension in head file: " + path.string());
  if (s.n_min == 0 || s.n_min > s.n_max)
    throw IoError("bad n-gram range in head file: " + path.string());
  p.w1 = Matrix(p.dims.f, p.dims.h1);
  p.b1.resize(p.dims.h1);
  p.w2 = Matrix(p.dims.h1, p.dims.h2);
  p.b2.resize(p.dims.h2);
  p.w3 = Matrix(p.dims.h2, p.dims.e);
  p.b3.resize(p.dims.e);
  for (auto* part : {&p.w1.data, &p.b1, &p.w2.data, &p.b2, &p.w3.data, &p.b3}) {
    for (double& v : *part) {
      v = r.f32();
      if (!std::isfinite(v))
        throw IoError("non-finite parameter in head file: " + path.string());
    }
  }
  if (!r.exhausted()) throw IoError("trailing bytes in head file: " + path.string());
  return {std::move(p), s};
}

std::uint64_t head_fingerprint(const HeadParams& p, const FeatureScheme& s) {
  const std::vector<std::uint8_t> bytes = serialize_head(p, s);
  return fnv1a64(std::span<const std::uint8_t>(bytes));
}

}  // namespace lyricmatch
