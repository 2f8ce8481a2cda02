#include "lyricmatch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "lyricmatch/errors.hpp"
#include "lyricmatch/rng.hpp"

namespace lyricmatch {

FoldPlan make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(corpus.groups.size());
  for (const auto& [id, covers] : corpus.groups) ids.push_back(id);
  const std::size_t g = ids.size();
  if (k < 2) throw TooFewGroups("fold count must be >= 2");
  if (g < k)
    throw TooFewGroups("need at least " + std::to_string(k) + " groups, have " +
                       std::to_string(g));

  std::mt19937_64 rng = make_rng(mix_seed(seed, 0xF01D));
  shuffle_in_place(ids, rng);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.folds.resize(k);
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = g * f / k;
    const std::size_t hi = g * (f + 1) / k;
    FoldAssignment& fold = plan.folds[f];
    fold.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(lo),
                     ids.begin() + static_cast<std::ptrdiff_t>(hi));
    std::vector<std::string> rest;
    rest.reserve(g - (hi - lo));
    rest.insert(rest.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(lo));
    rest.insert(rest.end(), ids.begin() + static_cast<std::ptrdiff_t>(hi), ids.end());

    std::mt19937_64 fold_rng = make_rng(mix_seed(seed, 0xBEEF00 + f));
    shuffle_in_place(rest, fold_rng);
    // Balance train and val against the 64/16 targets: their deviations sum
    // to a constant fixed by the test shard, so split that constant evenly.
    std::size_t n_train = static_cast<std::size_t>(std::llround(
        (static_cast<double>(rest.size()) + 0.48 * static_cast<double>(g)) / 2.0));
    n_train = std::max<std::size_t>(n_train, 1);
    if (rest.size() >= 2) n_train = std::min(n_train, rest.size() - 1);
    fold.train.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_train));
    fold.validation.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_train),
                           rest.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.test.begin(), fold.test.end());
  }
  return plan;
}

double average_precision(const RankedResult& ranking,
                         const std::set<std::string>& relevant) {
  if (relevant.empty())
    throw UnknownRelevant("average_precision: empty relevant set");
  std::unordered_set<std::string> ids;
  for (const auto& [id, d] : ranking.ranking) ids.insert(id);
  for (const std::string& r : relevant) {
    if (!ids.count(r))
      throw UnknownRelevant("relevant id \"" + r + "\" not in ranking for query \"" +
                            ranking.query_id + "\"");
  }
  double sum = 0;
  std::size_t hits = 0;
  for (std::size_t pos = 0; pos < ranking.ranking.size(); ++pos) {
    if (relevant.count(ranking.ranking[pos].first)) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(pos + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

namespace {

std::size_t rank_of_truth(const RankedResult& r,
                          const std::map<std::string, std::string>& truth) {
  auto it = truth.find(r.query_id);
  if (it == truth.end())
    throw UnknownRelevant("no truth entry for query \"" + r.query_id + "\"");
  for (std::size_t pos = 0; pos < r.ranking.size(); ++pos) {
    if (r.ranking[pos].first == it->second) return pos + 1;
  }
  throw UnknownRelevant("truth id \"" + it->second + "\" not in ranking for \"" +
                        r.query_id + "\"");
}

}  // namespace

double mean_rank(std::span<const RankedResult> rankings,
                 const std::map<std::string, std::string>& truth) {
  if (rankings.empty()) throw UnknownRelevant("mean_rank: no rankings");
  double sum = 0;
  for (const RankedResult& r : rankings)
    sum += static_cast<double>(rank_of_truth(r, truth));
  return sum / static_cast<double>(rankings.size());
}

double precision_at_1(std::span<const RankedResult> rankings,
                      const std::map<std::string, std::string>& truth) {
  if (rankings.empty()) throw UnknownRelevant("precision_at_1: no rankings");
  std::size_t correct = 0;
  for (const RankedResult& r : rankings)
    if (rank_of_truth(r, truth) == 1) ++correct;
  return static_cast<double>(correct) / static_cast<double>(rankings.size());
}

std::string cv_method_name(CvMethod m) {
  switch (m) {
    case CvMethod::Levenshtein:
      return "levenshtein";
    case CvMethod::Wer:
      return "wer";
    case CvMethod::Bow:
      return "bow";
    case CvMethod::Triplet:
      return "triplet";
  }
  return "unknown";
}

namespace {

Aggregate aggregate_of(std::span<const double> xs) {
  Aggregate a;
  if (xs.empty()) return a;
  double sum = 0;
  for (double x : xs) sum += x;
  a.mean = sum / static_cast<double>(xs.size());
  if (xs.size() >= 2) {
    double ss = 0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return a;
}

struct FoldData {
  std::vector<std::pair<std::string, NormalizedLyrics>> db;     // test originals
  std::vector<std::size_t> query_records;                       // cover indices
  std::map<std::string, std::string> truth;
};

FoldData fold_data(const Corpus& corpus,
                   const std::vector<NormalizedLyrics>& normed,
                   const FoldAssignment& fold) {
  FoldData fd;
  const std::unordered_set<std::string> test_set(fold.test.begin(), fold.test.end());
  for (const std::string& gid : fold.test) {
    fd.db.emplace_back(gid, normed[corpus.by_id.at(gid)]);
  }
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const SongRecord& r = corpus.records[i];
    if (r.role == Role::Cover && test_set.count(*r.original_id)) {
      fd.query_records.push_back(i);
      fd.truth.emplace(r.id, *r.original_id);
    }
  }
  return fd;
}

}  // namespace

SampleSet collect_group_samples(const Corpus& corpus,
                                const std::vector<NormalizedLyrics>& normed,
                                const std::vector<std::string>& group_ids,
                                const FeatureScheme& scheme) {
  const std::unordered_set<std::string> wanted(group_ids.begin(), group_ids.end());
  std::map<std::string, std::uint32_t> label_of;
  for (const std::string& gid : group_ids)
    label_of.emplace(gid, static_cast<std::uint32_t>(label_of.size()));

  std::vector<std::size_t> rows;
  SampleSet set;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const SongRecord& r = corpus.records[i];
    const std::string& gid =
        r.role == Role::Original ? r.id : *r.original_id;
    if (!wanted.count(gid)) continue;
    rows.push_back(i);
    set.labels.push_back(label_of.at(gid));
  }
  set.features = Matrix(rows.size(), scheme.dim);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(rows.size()); ++i) {
    const FeatureVector f =
        extract_features(normed[rows[static_cast<std::size_t>(i)]], scheme);
    std::copy(f.values.begin(), f.values.end(),
              set.features.row(static_cast<std::size_t>(i)));
  }
  return set;
}

MetricsReport run_cross_validation(const Corpus& corpus, const FoldPlan& plan,
                                   CvMethod method, const CvConfig& config) {
  MetricsReport report;
  report.method = method;
  report.k = plan.k;

  const std::vector<NormalizedLyrics> normed = normalize_corpus(corpus, config.norm);

  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    try {
      const FoldData fd = fold_data(corpus, normed, plan.folds[f]);
      if (fd.query_records.empty())
        throw InsufficientCorpus("no cover queries in the test split");

      std::vector<RankedResult> rankings(fd.query_records.size());

      if (method == CvMethod::Triplet) {
        const SampleSet train = collect_group_samples(
            corpus, normed, plan.folds[f].train, config.scheme);
        const SampleSet val = collect_group_samples(
            corpus, normed, plan.folds[f].validation, config.scheme);
        auto [params, train_report] =
            fit(train, val, config.train, config.init_seed, config.dims);
        (void)train_report;
        const EmbeddingIndex index = build_index(fd.db, params, config.scheme);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t q = 0;
             q < static_cast<std::ptrdiff_t>(fd.query_records.size()); ++q) {
          const std::size_t rec = fd.query_records[static_cast<std::size_t>(q)];
          rankings[static_cast<std::size_t>(q)] =
              rank(corpus.records[rec].id, normed[rec], index, params,
                   config.scheme);
        }
      } else {
        Vocabulary vocab;
        if (method == CvMethod::Bow) {
          const std::unordered_set<std::string> train_set(
              plan.folds[f].train.begin(), plan.folds[f].train.end());
          std::vector<std::vector<std::string>> docs;
          for (std::size_t i = 0; i < corpus.records.size(); ++i) {
            const SongRecord& r = corpus.records[i];
            const std::string& gid =
                r.role == Role::Original ? r.id : *r.original_id;
            if (train_set.count(gid)) docs.push_back(normed[i].tokens);
          }
          vocab = build_vocabulary(docs);
        }
        const RankMetric metric = method == CvMethod::Levenshtein
                                      ? RankMetric::Levenshtein
                                      : method == CvMethod::Wer
                                            ? RankMetric::Wer
                                            : RankMetric::BowCosine;
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t q = 0;
             q < static_cast<std::ptrdiff_t>(fd.query_records.size()); ++q) {
          const std::size_t rec = fd.query_records[static_cast<std::size_t>(q)];
          rankings[static_cast<std::size_t>(q)] = rank_baseline(
              corpus.records[rec].id, normed[rec], fd.db, metric,
              method == CvMethod::Bow ? &vocab : nullptr);
        }
      }

      FoldMetrics fm;
      fm.n_queries = rankings.size();
      double ap_sum = 0;
      for (const RankedResult& r : rankings)
        ap_sum += average_precision(r, {fd.truth.at(r.query_id)});
      fm.map = ap_sum / static_cast<double>(rankings.size());
      fm.mean_rank = mean_rank(rankings, fd.truth);
      fm.p_at_1 = precision_at_1(rankings, fd.truth);
      report.per_fold.push_back(fm);
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f + 1) + ": " + e.what());
    }
  }

  std::vector<double> maps, mrs, p1s;
  for (const FoldMetrics& fm : report.per_fold) {
    maps.push_back(fm.map);
    mrs.push_back(fm.mean_rank);
    p1s.push_back(fm.p_at_1);
  }
  report.map = aggregate_of(maps);
  report.mr = aggregate_of(mrs);
  report.p1 = aggregate_of(p1s);
  return report;
}

std::string metrics_report_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["method"] = cv_method_name(report.method);
  j["k"] = report.k;
  nlohmann::ordered_json folds = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < report.per_fold.size(); ++f) {
    const FoldMetrics& fm = report.per_fold[f];
    nlohmann::ordered_json jf;
    jf["fold"] = f + 1;
    jf["map"] = fm.map;
    jf["mean_rank"] = fm.mean_rank;
    jf["p_at_1"] = fm.p_at_1;
    jf["n_queries"] = fm.n_queries;
    folds.push_back(std::move(jf));
  }
  j["per_fold"] = std::move(folds);
  nlohmann::ordered_json agg;
  auto block = [](const Aggregate& a) {
    nlohmann::ordered_json b;
    b["mean"] = a.mean;
    b["stddev"] = a.stddev;
    return b;
  };
  agg["map"] = block(report.map);
  agg["mean_rank"] = block(report.mr);
  agg["p_at_1"] = block(report.p1);
  j["aggregate"] = std::move(agg);
  return j.dump(2) + "\n";
}

std::string format_table(std::span<const MetricsReport> reports) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s  %-18s  %-16s  %-18s\n", "Method",
                "mAP", "MR", "P@1");
  out += line;
  for (const MetricsReport& r : reports) {
    char map_s[40], mr_s[40], p1_s[40];
    std::snprintf(map_s, sizeof(map_s), "%.2f +- %.2f %%", 100.0 * r.map.mean,
                  100.0 * r.map.stddev);
    std::snprintf(mr_s, sizeof(mr_s), "%.2f +- %.2f", r.mr.mean, r.mr.stddev);
    std::snprintf(p1_s, sizeof(p1_s), "%.2f +- %.2f %%", 100.0 * r.p1.mean,
                  100.0 * r.p1.stddev);
    std::snprintf(line, sizeof(line), "%-12s  %-18s  %-16s  %-18s\n",
                  cv_method_name(r.method).c_str(), map_s, mr_s, p1_s);
    out += line;
  }
  return out;
}

}  // namespace lyricmatch
