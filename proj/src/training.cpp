#include "lyricmatch/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lyricmatch/distance.hpp"
#include "lyricmatch/errors.hpp"
#include "lyricmatch/rng.hpp"

namespace lyricmatch {

namespace {

constexpr double kMomentum = 0.9;

void validate_config(const TrainConfig& c) {
  if (c.margin <= 0) throw ConfigError("margin must be > 0");
  if (c.batch_groups < 2) throw ConfigError("batch_groups must be >= 2");
  if (c.samples_per_group < 2) throw ConfigError("samples_per_group must be >= 2");
  if (c.learning_rate <= 0) throw ConfigError("learning_rate must be > 0");
  if (c.lr_reduce_factor <= 0 || c.lr_reduce_factor >= 1)
    throw ConfigError("lr_reduce_factor must be in (0,1)");
  if (c.lr_patience < 1) throw ConfigError("lr_patience must be >= 1");
  if (c.early_stop_patience < 1)
    throw ConfigError("early_stop_patience must be >= 1");
  if (c.min_delta < 0) throw ConfigError("min_delta must be >= 0");
}

Matrix pairwise_manhattan(const Matrix& e) {
  Matrix d(e.rows, e.rows);
  for (std::size_t i = 0; i < e.rows; ++i) {
    for (std::size_t j = i + 1; j < e.rows; ++j) {
      double s = 0;
      const double* a = e.row(i);
      const double* b = e.row(j);
      for (std::size_t k = 0; k < e.cols; ++k) s += std::abs(a[k] - b[k]);
      d.at(i, j) = s;
      d.at(j, i) = s;
    }
  }
  return d;
}

// dst (R x C) += srcT-row-scaled accumulation: dst = a^T * d where a is
// B x R and d is B x C. Parallel over dst rows.
void accumulate_weight_grad(const Matrix& a, const Matrix& d, Matrix& dst) {
  const Matrix at_t = [&] {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
      for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
  }();
  dst = Matrix(a.cols, d.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(a.cols); ++k) {
    const double* arow = at_t.row(static_cast<std::size_t>(k));
    double* out = dst.row(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < a.rows; ++i) {
      const double v = arow[i];
      if (v == 0.0) continue;
      const double* drow = d.row(i);
      for (std::size_t j = 0; j < d.cols; ++j) out[j] += v * drow[j];
    }
  }
}

// dst (B x R) = d (B x C) * w^T (C x R);  w stored R x C.
void backprop_through(const Matrix& d, const Matrix& w, Matrix& dst) {
  dst = Matrix(d.rows, w.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(d.rows); ++i) {
    const double* drow = d.row(static_cast<std::size_t>(i));
    double* out = dst.row(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < w.rows; ++k) {
      const double* wrow = w.row(k);
      double s = 0;
      for (std::size_t j = 0; j < w.cols; ++j) s += drow[j] * wrow[j];
      out[k] = s;
    }
  }
}

void column_sums(const Matrix& m, std::vector<double>& out) {
  out.assign(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j];
  }
}

void relu_mask_in_place(Matrix& grad, const Matrix& activ) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    if (activ.data[i] <= 0.0) grad.data[i] = 0.0;
  }
}

HeadParams zero_like(const HeadParams& p) {
  HeadParams z;
  z.dims = p.dims;
  z.w1 = Matrix(p.w1.rows, p.w1.cols);
  z.w2 = Matrix(p.w2.rows, p.w2.cols);
  z.w3 = Matrix(p.w3.rows, p.w3.cols);
  z.b1.assign(p.b1.size(), 0.0);
  z.b2.assign(p.b2.size(), 0.0);
  z.b3.assign(p.b3.size(), 0.0);
  return z;
}

}  // namespace

double triplet_loss(std::span<const double> a, std::span<const double> p,
                    std::span<const double> n, double margin) {
  const double dp = manhattan(a, p);
  const double dn = manhattan(a, n);
  return std::max(0.0, dp - dn + margin);
}

std::vector<Triplet> mine_triplets(const Matrix& embeddings,
                                   std::span<const std::uint32_t> labels,
                                   MiningStrategy strategy, double margin) {
  const std::size_t b = embeddings.rows;
  if (labels.size() != b)
    throw DimensionMismatch("mine_triplets: " + std::to_string(labels.size()) +
                            " labels for " + std::to_string(b) + " embeddings");
  std::map<std::uint32_t, std::size_t> label_counts;
  for (std::uint32_t l : labels) ++label_counts[l];
  const bool has_pair = std::any_of(label_counts.begin(), label_counts.end(),
                                    [](const auto& kv) { return kv.second >= 2; });
  if (label_counts.size() < 2 || !has_pair)
    throw DegenerateBatch("batch needs >=2 labels and one label with >=2 members");

  const Matrix d = pairwise_manhattan(embeddings);
  std::vector<Triplet> out;

  if (strategy == MiningStrategy::BatchAll) {
    for (std::uint32_t a = 0; a < b; ++a) {
      for (std::uint32_t p = 0; p < b; ++p) {
        if (p == a || labels[p] != labels[a]) continue;
        for (std::uint32_t n = 0; n < b; ++n) {
          if (labels[n] == labels[a]) continue;
          if (d.at(a, p) - d.at(a, n) + margin > 0) out.push_back({a, p, n});
        }
      }
    }
    return out;
  }

  for (std::uint32_t a = 0; a < b; ++a) {
    std::int64_t hardest_p = -1;
    for (std::uint32_t p = 0; p < b; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      if (hardest_p < 0 || d.at(a, p) > d.at(a, static_cast<std::size_t>(hardest_p)))
        hardest_p = p;
    }
    if (hardest_p < 0) continue;
    const double dp = d.at(a, static_cast<std::size_t>(hardest_p));

    std::int64_t best_n = -1;
    for (std::uint32_t n = 0; n < b; ++n) {
      if (labels[n] == labels[a]) continue;
      if (strategy == MiningStrategy::SemiHard && !(d.at(a, n) > dp)) continue;
      if (best_n < 0 || d.at(a, n) < d.at(a, static_cast<std::size_t>(best_n)))
        best_n = n;
    }
    if (best_n < 0) continue;  // SemiHard may find no admissible negative
    out.push_back({a, static_cast<std::uint32_t>(hardest_p),
                   static_cast<std::uint32_t>(best_n)});
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> make_batches(
    const std::vector<std::vector<std::uint32_t>>& groups, std::size_t p,
    std::size_t k, std::uint64_t seed, std::uint64_t epoch) {
  if (p < 2) throw ConfigError("batch_groups must be >= 2");
  if (k < 2) throw ConfigError("samples_per_group must be >= 2");
  std::vector<std::size_t> eligible;
  for (std::size_t g = 0; g < groups.size(); ++g)
    if (groups[g].size() >= 2) eligible.push_back(g);
  if (eligible.size() < p)
    throw InsufficientGroups("need " + std::to_string(p) +
                             " groups with >=2 samples, have " +
                             std::to_string(eligible.size()));

  std::mt19937_64 rng = make_rng(mix_seed(seed, epoch * 2 + 1));
  shuffle_in_place(eligible, rng);

  const std::size_t nb = (eligible.size() + p - 1) / p;
  std::vector<std::vector<std::uint32_t>> batches;
  batches.reserve(nb);
  for (std::size_t bi = 0; bi < nb; ++bi) {
    std::vector<std::size_t> chunk(
        eligible.begin() + static_cast<std::ptrdiff_t>(bi * p),
        eligible.begin() +
            static_cast<std::ptrdiff_t>(std::min((bi + 1) * p, eligible.size())));
    for (std::size_t fill = 0; chunk.size() < p; ++fill) {
      const std::size_t cand = eligible[fill];
      if (std::find(chunk.begin(), chunk.end(), cand) == chunk.end())
        chunk.push_back(cand);
    }
    std::vector<std::uint32_t> batch;
    batch.reserve(p * k);
    for (std::size_t g : chunk) {
      const std::vector<std::uint32_t>& members = groups[g];
      if (members.size() >= k) {
        std::vector<std::uint32_t> pool = members;
        shuffle_in_place(pool, rng);
        batch.insert(batch.end(), pool.begin(),
                     pool.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        batch.insert(batch.end(), members.begin(), members.end());
        for (std::size_t extra = members.size(); extra < k; ++extra)
          batch.push_back(members[draw_below(rng, members.size())]);
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

std::pair<double, HeadParams> backward(const Matrix& features,
                                       std::span<const std::uint32_t> labels,
                                       const HeadParams& params,
                                       const TrainConfig& config) {
  const std::size_t b = features.rows;
  if (features.cols != params.dims.f)
    throw DimensionMismatch("backward: feature dim " +
                            std::to_string(features.cols) + " vs F=" +
                            std::to_string(params.dims.f));
  // Forward pass, keeping the post-relu activations: a zero after relu
  // is exactly the mask the backward pass needs.
  auto affine = [&](const Matrix& src, const Matrix& w,
                    const std::vector<double>& bias, bool relu) {
    Matrix dst(src.rows, w.cols);
    for (std::size_t i = 0; i < src.rows; ++i) {
      double* out = dst.row(i);
      std::copy(bias.begin(), bias.end(), out);
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(src.rows); ++i) {
      const double* x = src.row(static_cast<std::size_t>(i));
      double* out = dst.row(static_cast<std::size_t>(i));
      for (std::size_t kk = 0; kk < src.cols; ++kk) {
        const double xv = x[kk];
        if (xv == 0.0) continue;
        const double* wrow = w.row(kk);
        for (std::size_t j = 0; j < w.cols; ++j) out[j] += xv * wrow[j];
      }
      if (relu) {
        for (std::size_t j = 0; j < w.cols; ++j) out[j] = std::max(out[j], 0.0);
      }
    }
    return dst;
  };
  const Matrix a1 = affine(features, params.w1, params.b1, true);
  const Matrix a2 = affine(a1, params.w2, params.b2, true);
  const Matrix emb = affine(a2, params.w3, params.b3, false);

  // --- mining + loss ---
  const std::vector<Triplet> triplets =
      mine_triplets(emb, labels, config.mining, config.margin);
  HeadParams grads = zero_like(params);
  if (triplets.empty()) return {0.0, std::move(grads)};

  const double inv_t = 1.0 / static_cast<double>(triplets.size());
  double loss_sum = 0;
  Matrix demb(b, params.dims.e);
  for (const Triplet& t : triplets) {
    const double* ea = emb.row(t.anchor);
    const double* ep = emb.row(t.positive);
    const double* en = emb.row(t.negative);
    double dp = 0, dn = 0;
    for (std::size_t j = 0; j < params.dims.e; ++j) {
      dp += std::abs(ea[j] - ep[j]);
      dn += std::abs(ea[j] - en[j]);
    }
    const double l = dp - dn + config.margin;
    if (l <= 0) continue;  // BatchHard/SemiHard may mine non-violating triplets
    loss_sum += l;
    double* ga = demb.row(t.anchor);
    double* gp = demb.row(t.positive);
    double* gn = demb.row(t.negative);
    for (std::size_t j = 0; j < params.dims.e; ++j) {
      const double sp = ea[j] > ep[j] ? 1.0 : (ea[j] < ep[j] ? -1.0 : 0.0);
      const double sn = ea[j] > en[j] ? 1.0 : (ea[j] < en[j] ? -1.0 : 0.0);
      ga[j] += inv_t * (sp - sn);
      gp[j] -= inv_t * sp;
      gn[j] += inv_t * sn;
    }
  }
  const double loss = loss_sum * inv_t;

  // --- backprop ---
  accumulate_weight_grad(a2, demb, grads.w3);
  column_sums(demb, grads.b3);
  Matrix da2;
  backprop_through(demb, params.w3, da2);
  relu_mask_in_place(da2, a2);
  accumulate_weight_grad(a1, da2, grads.w2);
  column_sums(da2, grads.b2);
  Matrix da1;
  backprop_through(da2, params.w2, da1);
  relu_mask_in_place(da1, a1);
  accumulate_weight_grad(features, da1, grads.w1);
  column_sums(da1, grads.b1);
  return {loss, std::move(grads)};
}

namespace {

Matrix gather_rows(const Matrix& src, std::span<const std::uint32_t> idx) {
  Matrix out(idx.size(), src.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* from = src.row(idx[i]);
    std::copy(from, from + src.cols, out.row(i));
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> groups_from_labels(
    std::span<const std::uint32_t> labels) {
  std::vector<std::vector<std::uint32_t>> groups;
  std::map<std::uint32_t, std::size_t> slot;
  for (std::uint32_t i = 0; i < labels.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(labels[i], groups.size());
    if (fresh) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

double validation_loss(const SampleSet& val,
                       const std::vector<std::vector<std::uint32_t>>& val_batches,
                       const HeadParams& params, double margin) {
  double sum = 0;
  std::size_t count = 0;
  for (const auto& batch : val_batches) {
    const Matrix bf = gather_rows(val.features, batch);
    std::vector<std::uint32_t> bl(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) bl[i] = val.labels[batch[i]];
    const Matrix emb = head_forward_batch(bf, params);
    const std::vector<Triplet> mined =
        mine_triplets(emb, bl, MiningStrategy::BatchAll, margin);
    for (const Triplet& t : mined) {
      sum += triplet_loss(
          std::span<const double>(emb.row(t.anchor), emb.cols),
          std::span<const double>(emb.row(t.positive), emb.cols),
          std::span<const double>(emb.row(t.negative), emb.cols), margin);
    }
    count += mined.size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

void sgd_step(HeadParams& params, HeadParams& velocity, const HeadParams& grads,
              double lr) {
  auto update = [lr](std::vector<double>& theta, std::vector<double>& v,
                     const std::vector<double>& g) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(theta.size()); ++i) {
      const auto u = static_cast<std::size_t>(i);
      v[u] = kMomentum * v[u] - lr * g[u];
      theta[u] += v[u];
    }
  };
  update(params.w1.data, velocity.w1.data, grads.w1.data);
  update(params.b1, velocity.b1, grads.b1);
  update(params.w2.data, velocity.w2.data, grads.w2.data);
  update(params.b2, velocity.b2, grads.b2);
  update(params.w3.data, velocity.w3.data, grads.w3.data);
  update(params.b3, velocity.b3, grads.b3);
}

}  // namespace

std::pair<HeadParams, TrainReport> fit(const SampleSet& train,
                                       const SampleSet& val,
                                       const TrainConfig& config,
                                       std::uint64_t init_seed,
                                       const HeadDims& dims) {
  validate_config(config);
  if (train.labels.empty() || val.labels.empty())
    throw InsufficientGroups("fit: empty train or validation split");
  if (train.features.rows != train.labels.size() ||
      val.features.rows != val.labels.size())
    throw DimensionMismatch("fit: features/labels row mismatch");
  if (config.batch_groups * config.samples_per_group > train.labels.size())
    throw ConfigError("P*K exceeds the number of training samples");

  const auto train_groups = groups_from_labels(train.labels);
  const auto val_groups = groups_from_labels(val.labels);

  // Validation batches are fixed across epochs so the early-stopping
  // signal tracks the model, not the batch composition.
  std::size_t val_eligible = 0;
  for (const auto& g : val_groups)
    if (g.size() >= 2) ++val_eligible;
  std::vector<std::vector<std::uint32_t>> val_batches;
  if (val_eligible >= 2) {
    val_batches = make_batches(val_groups,
                               std::min(config.batch_groups, val_eligible),
                               config.samples_per_group,
                               mix_seed(config.seed, 0x56414Cu), 0);
  }

  HeadParams params = init_params(init_seed, dims);
  HeadParams velocity = zero_like(params);
  HeadParams best_params = params;
  TrainReport report;
  double best_val = std::numeric_limits<double>::infinity();
  double patience_best = std::numeric_limits<double>::infinity();
  double lr = config.learning_rate;
  std::size_t since_improve = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = make_batches(train_groups, config.batch_groups,
                                      config.samples_per_group, config.seed,
                                      epoch);
    double loss_sum = 0;
    for (const auto& batch : batches) {
      const Matrix bf = gather_rows(train.features, batch);
      std::vector<std::uint32_t> bl(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i)
        bl[i] = train.labels[batch[i]];
      auto [loss, grads] = backward(bf, bl, params, config);
      sgd_step(params, velocity, grads, lr);
      loss_sum += loss;
    }
    const double train_loss = loss_sum / static_cast<double>(batches.size());
    const double val_loss = validation_loss(val, val_batches, params, config.margin);

    ++report.epochs_run;
    report.train_loss_per_epoch.push_back(train_loss);
    report.val_loss_per_epoch.push_back(val_loss);
    report.lr_schedule.push_back(lr);

    if (val_loss < best_val) {
      best_val = val_loss;
      best_params = params;
      report.best_params_epoch = epoch;
    }
    if (val_loss < patience_best - config.min_delta) {
      patience_best = val_loss;
      since_improve = 0;
    } else {
      ++since_improve;
      if (since_improve >= config.early_stop_patience) {
        report.stopped_early = true;
        break;
      }
      if (since_improve % config.lr_patience == 0) lr *= config.lr_reduce_factor;
    }
  }

  if (report.epochs_run == 0) return {std::move(params), std::move(report)};
  return {std::move(best_params), std::move(report)};
}

}  // namespace lyricmatch
