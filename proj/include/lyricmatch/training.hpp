#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lyricmatch/embedding.hpp"

namespace lyricmatch {

enum class MiningStrategy { BatchAll, BatchHard, SemiHard };

struct TrainConfig {
  double margin = 0.5;
  std::size_t batch_groups = 16;      // P distinct groups per batch
  std::size_t samples_per_group = 4;  // K samples from each
  MiningStrategy mining = MiningStrategy::BatchHard;
  double learning_rate = 1e-3;
  double lr_reduce_factor = 0.5;
  std::size_t lr_patience = 2;
  std::size_t early_stop_patience = 5;
  double min_delta = 1e-4;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 1;
};

struct Triplet {
  std::uint32_t anchor;
  std::uint32_t positive;
  std::uint32_t negative;
  bool operator==(const Triplet&) const = default;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  std::vector<double> train_loss_per_epoch;
  std::vector<double> val_loss_per_epoch;
  std::vector<double> lr_schedule;  // rate in effect during each epoch
  bool stopped_early = false;
  std::size_t best_params_epoch = 0;  // 1-based; 0 when nothing ran
  bool operator==(const TrainReport&) const = default;
};

// Labeled feature rows; label = group id shared by an original and
// its covers.
struct SampleSet {
  Matrix features;  // N x F
  std::vector<std::uint32_t> labels;
};

double triplet_loss(std::span<const double> a, std::span<const double> p,
                    std::span<const double> n, double margin);

// In-batch mining over embedding rows. Ties break toward the lowest
// batch index; throws DegenerateBatch when no (positive, negative)
// structure exists.
std::vector<Triplet> mine_triplets(const Matrix& embeddings,
                                   std::span<const std::uint32_t> labels,
                                   MiningStrategy strategy, double margin);

// PK batches: each batch is P distinct groups x K sample indices.
// Groups with a single member are skipped; groups smaller than K are
// drawn with replacement. Deterministic in (seed, epoch).
std::vector<std::vector<std::uint32_t>> make_batches(
    const std::vector<std::vector<std::uint32_t>>& groups, std::size_t p,
    std::size_t k, std::uint64_t seed, std::uint64_t epoch);

// Mean mined-triplet loss and its exact gradients through the head.
std::pair<double, HeadParams> backward(const Matrix& features,
                                       std::span<const std::uint32_t> labels,
                                       const HeadParams& params,
                                       const TrainConfig& config);

// Momentum SGD with validation-driven learning-rate reduction and
// early stopping; returns the parameters of the best validation epoch.
std::pair<HeadParams, TrainReport> fit(const SampleSet& train,
                                       const SampleSet& val,
                                       const TrainConfig& config,
                                       std::uint64_t init_seed,
                                       const HeadDims& dims);

}  // namespace lyricmatch
