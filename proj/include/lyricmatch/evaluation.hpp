#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lyricmatch/corpus.hpp"
#include "lyricmatch/embedding.hpp"
#include "lyricmatch/retrieval.hpp"
#include "lyricmatch/training.hpp"

namespace lyricmatch {

struct FoldAssignment {
  std::vector<std::string> train;  // group ids, sorted
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

struct FoldPlan {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::vector<FoldAssignment> folds;
};

// Deterministic grouped split: k test shards over the shuffled group
// list, then an 80/20 train/validation split of the remainder per fold
// (64/16/20 of the whole).
FoldPlan make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

double average_precision(const RankedResult& ranking,
                         const std::set<std::string>& relevant);
double mean_rank(std::span<const RankedResult> rankings,
                 const std::map<std::string, std::string>& truth);
double precision_at_1(std::span<const RankedResult> rankings,
                      const std::map<std::string, std::string>& truth);

enum class CvMethod { Levenshtein, Wer, Bow, Triplet };

std::string cv_method_name(CvMethod m);

struct CvConfig {
  NormalizationConfig norm;
  TrainConfig train;        // Triplet only
  FeatureScheme scheme;     // Triplet only
  HeadDims dims;            // Triplet only
  std::uint64_t init_seed = 7;
};

struct FoldMetrics {
  double map = 0;
  double mean_rank = 0;
  double p_at_1 = 0;
  std::size_t n_queries = 0;
};

struct Aggregate {
  double mean = 0;
  double stddev = 0;  // sample standard deviation (n-1)
};

struct MetricsReport {
  CvMethod method = CvMethod::Levenshtein;
  std::size_t k = 0;
  std::vector<FoldMetrics> per_fold;
  Aggregate map;
  Aggregate mr;
  Aggregate p1;
};

MetricsReport run_cross_validation(const Corpus& corpus, const FoldPlan& plan,
                                   CvMethod method, const CvConfig& config);

// Feature rows plus group labels for every record whose group is in
// `group_ids` (labels dense, one per group id).
SampleSet collect_group_samples(const Corpus& corpus,
                                const std::vector<NormalizedLyrics>& normed,
                                const std::vector<std::string>& group_ids,
                                const FeatureScheme& scheme);

std::string metrics_report_json(const MetricsReport& report);

// Plain-text table, one row per report: mAP / MR / P@1 as mean +/- std.
std::string format_table(std::span<const MetricsReport> reports);

}  // namespace lyricmatch
