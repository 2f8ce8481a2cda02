#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "lyricmatch/configfile.hpp"
#include "lyricmatch/corpus.hpp"
#include "lyricmatch/distance.hpp"
#include "lyricmatch/errors.hpp"
#include "lyricmatch/evaluation.hpp"
#include "lyricmatch/retrieval.hpp"
#include "lyricmatch/rng.hpp"
#include "lyricmatch/training.hpp"

namespace lm = lyricmatch;

namespace {

struct CommonArgs {
  std::string corpus_path;
  std::string format = "jsonl";
  std::string config_path;
  bool no_normalize = false;
  int threads = 0;
};

lm::CorpusFormat parse_format(const std::string& f) {
  return f == "csv" ? lm::CorpusFormat::Csv : lm::CorpusFormat::JsonLines;
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads <= 0) {
    if (const char* env = std::getenv("LYRICMATCH_THREADS")) {
      threads = std::atoi(env);
    }
  }
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

lm::ConfigFile load_config(const CommonArgs& common) {
  if (common.config_path.empty()) return {};
  return lm::ConfigFile::load(common.config_path);
}

lm::NormalizationConfig resolve_norm(const lm::ConfigFile& cfg, bool no_normalize) {
  if (no_normalize) {
    lm::NormalizationConfig off;
    off.strip_section_tags = false;
    off.drop_filler_lines = false;
    off.lowercase = false;
    off.unicode_fold = false;
    off.collapse_whitespace = false;
    off.strip_punctuation = false;
    return off;
  }
  return cfg.normalization();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lm::IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw lm::IoError("write failed: " + path);
}

std::string stats_json(const lm::CorpusStats& s, const std::string& metric) {
  nlohmann::ordered_json j;
  j["metric"] = metric;
  j["mean_matched"] = s.mean_matched;
  j["mean_unmatched"] = s.mean_unmatched;
  j["min_unmatched_mean"] = s.min_unmatched_mean;
  j["confusion_fraction"] = s.confusion_fraction;
  j["matched_pairs"] = s.matched_pairs;
  j["unmatched_pairs"] = s.unmatched_pairs;
  j["skipped_pairs"] = s.skipped_pairs;
  j["histogram_bins"] = lm::kStatsBins;
  j["histogram_max"] = s.histogram_max;
  j["matched_histogram"] = s.matched_histogram;
  j["unmatched_histogram"] = s.unmatched_histogram;
  return j.dump(2) + "\n";
}

std::string train_report_json(const lm::TrainReport& r) {
  nlohmann::ordered_json j;
  j["epochs_run"] = r.epochs_run;
  j["stopped_early"] = r.stopped_early;
  j["best_params_epoch"] = r.best_params_epoch;
  j["train_loss_per_epoch"] = r.train_loss_per_epoch;
  j["val_loss_per_epoch"] = r.val_loss_per_epoch;
  j["lr_schedule"] = r.lr_schedule;
  return j.dump(2) + "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"lyrics-based cover song detection"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--threads", common.threads,
                 "worker thread cap (or LYRICMATCH_THREADS)");

  auto add_corpus_opts = [&](CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--corpus", common.corpus_path, "corpus file");
    if (required) opt->required()->check(CLI::ExistingFile);
    cmd->add_option("--format", common.format, "corpus format")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_option("--config", common.config_path, "key=value config file")
        ->check(CLI::ExistingFile);
    cmd->add_flag("--no-normalize", common.no_normalize,
                  "disable lyric normalization");
  };

  // ingest
  auto* c_ingest = app.add_subcommand("ingest", "validate a corpus file");
  add_corpus_opts(c_ingest);

  // stats
  auto* c_stats = app.add_subcommand("stats", "matched vs unmatched distance analysis");
  add_corpus_opts(c_stats);
  std::string stats_metric = "levenshtein";
  std::string stats_out;
  c_stats->add_option("--metric", stats_metric, "distance metric")
      ->check(CLI::IsMember({"levenshtein", "wer"}));
  c_stats->add_option("--out", stats_out, "stats report path (default stdout)");

  // cv
  auto* c_cv = app.add_subcommand("cv", "grouped k-fold cross-validation");
  add_corpus_opts(c_cv);
  std::string cv_method = "levenshtein";
  std::size_t cv_folds = 5;
  std::uint64_t cv_seed = 1;
  std::int64_t cv_max_epochs = -1;
  std::string cv_out_json, cv_out_table;
  c_cv->add_option("--method", cv_method, "ranking method")
      ->check(CLI::IsMember({"levenshtein", "wer", "bow", "triplet"}));
  c_cv->add_option("--folds", cv_folds, "fold count");
  c_cv->add_option("--seed", cv_seed, "fold shuffle seed");
  c_cv->add_option("--max-epochs", cv_max_epochs, "training epoch override");
  c_cv->add_option("--out-json", cv_out_json, "metrics report path");
  c_cv->add_option("--out-table", cv_out_table, "text table path");

  // train
  auto* c_train = app.add_subcommand("train", "train an embedding head");
  add_corpus_opts(c_train);
  std::string train_out, train_report_path;
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  std::uint64_t init_seed = 7;
  double val_fraction = 0.2;
  std::uint64_t split_seed = 99;
  c_train->add_option("--out", train_out, "head file path")->required();
  c_train->add_option("--report", train_report_path, "training report path");
  c_train->add_option("--seed", train_seed, "batch shuffle seed")
      ->each([&](const std::string&) { train_seed_set = true; });
  c_train->add_option("--init-seed", init_seed, "parameter init seed");
  c_train->add_option("--val-fraction", val_fraction, "validation group fraction")
      ->check(CLI::Range(0.05, 0.5));
  c_train->add_option("--split-seed", split_seed, "train/val split seed");

  // embed
  auto* c_embed = app.add_subcommand("embed", "build an original-song index");
  add_corpus_opts(c_embed);
  std::string embed_head, embed_out;
  c_embed->add_option("--head", embed_head, "head file")->required()->check(CLI::ExistingFile);
  c_embed->add_option("--out", embed_out, "index file path")->required();

  // rank
  auto* c_rank = app.add_subcommand("rank", "rank originals for one query lyric");
  std::string rank_query, rank_index, rank_head, rank_out, rank_query_id;
  std::size_t rank_k = 10;
  c_rank->add_option("--query", rank_query, "query lyrics text file")
      ->required()
      ->check(CLI::ExistingFile);
  c_rank->add_option("--index", rank_index, "index file")->required()->check(CLI::ExistingFile);
  c_rank->add_option("--head", rank_head, "head file")->required()->check(CLI::ExistingFile);
  c_rank->add_option("--k", rank_k, "ranking entries to emit");
  c_rank->add_option("--out", rank_out, "output path (default stdout)");
  c_rank->add_option("--query-id", rank_query_id, "id used in the report line");
  c_rank->add_option("--config", common.config_path, "key=value config file")
      ->check(CLI::ExistingFile);
  c_rank->add_flag("--no-normalize", common.no_normalize, "disable lyric normalization");

  // report
  auto* c_report = app.add_subcommand("report", "format metric reports as a table");
  std::vector<std::string> report_inputs;
  std::string report_out;
  c_report->add_option("--in", report_inputs, "metrics report JSON files")
      ->required()
      ->check(CLI::ExistingFile);
  c_report->add_option("--out", report_out, "table path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  apply_threads(common.threads);
  const lm::ConfigFile cfg = load_config(common);

  if (c_ingest->parsed()) {
    const lm::Corpus corpus =
        lm::ingest(common.corpus_path, parse_format(common.format));
    std::cout << "originals=" << corpus.n_originals()
              << " covers=" << corpus.n_covers()
              << " groups=" << corpus.groups.size() << "\n";
    return 0;
  }

  if (c_stats->parsed()) {
    const lm::Corpus corpus =
        lm::ingest(common.corpus_path, parse_format(common.format));
    const lm::DistanceMetric metric = stats_metric == "wer"
                                          ? lm::DistanceMetric::Wer
                                          : lm::DistanceMetric::Levenshtein;
    const lm::CorpusStats stats =
        lm::corpus_stats(corpus, metric, resolve_norm(cfg, common.no_normalize));
    const std::string doc = stats_json(stats, stats_metric);
    if (stats_out.empty()) std::cout << doc;
    else write_text_file(stats_out, doc);
    return 0;
  }

  if (c_cv->parsed()) {
    const lm::Corpus corpus =
        lm::ingest(common.corpus_path, parse_format(common.format));
    lm::CvConfig cv_config;
    cv_config.norm = resolve_norm(cfg, common.no_normalize);
    cv_config.train = cfg.training();
    cv_config.scheme = cfg.feature_scheme();
    cv_config.dims = cfg.head_dims();
    cv_config.init_seed = cfg.get_u64("training", "init_seed", cv_config.init_seed);
    if (cv_max_epochs >= 0)
      cv_config.train.max_epochs = static_cast<std::size_t>(cv_max_epochs);
    if (cv_config.dims.f != cv_config.scheme.dim)
      throw lm::ConfigError("model F must equal the feature dim");

    const lm::CvMethod method =
        cv_method == "wer" ? lm::CvMethod::Wer
        : cv_method == "bow" ? lm::CvMethod::Bow
        : cv_method == "triplet" ? lm::CvMethod::Triplet
                                 : lm::CvMethod::Levenshtein;
    const lm::FoldPlan plan = lm::make_folds(corpus, cv_folds, cv_seed);
    const lm::MetricsReport report =
        lm::run_cross_validation(corpus, plan, method, cv_config);
    const std::string json = lm::metrics_report_json(report);
    const std::string table = lm::format_table({&report, 1});
    if (cv_out_json.empty()) std::cout << json;
    else write_text_file(cv_out_json, json);
    if (cv_out_table.empty()) std::cout << table;
    else write_text_file(cv_out_table, table);
    return 0;
  }

  if (c_train->parsed()) {
    const lm::Corpus corpus =
        lm::ingest(common.corpus_path, parse_format(common.format));
    const lm::NormalizationConfig norm = resolve_norm(cfg, common.no_normalize);
    lm::TrainConfig tc = cfg.training();
    if (train_seed_set) tc.seed = train_seed;
    const lm::FeatureScheme scheme = cfg.feature_scheme();
    const lm::HeadDims dims = cfg.head_dims();
    if (dims.f != scheme.dim)
      throw lm::ConfigError("model F must equal the feature dim");

    const std::vector<lm::NormalizedLyrics> normed =
        lm::normalize_corpus(corpus, norm);
    std::vector<std::string> group_ids;
    for (const auto& [gid, covers] : corpus.groups) group_ids.push_back(gid);
    std::mt19937_64 rng = lm::make_rng(lm::mix_seed(split_seed, 0x5EED));
    lm::shuffle_in_place(group_ids, rng);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(val_fraction * static_cast<double>(group_ids.size()))));
    if (n_val >= group_ids.size())
      throw lm::InsufficientGroups("not enough groups for a train/val split");
    std::vector<std::string> val_ids(group_ids.begin(),
                                     group_ids.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::string> train_ids(group_ids.begin() + static_cast<std::ptrdiff_t>(n_val),
                                       group_ids.end());
    std::sort(val_ids.begin(), val_ids.end());
    std::sort(train_ids.begin(), train_ids.end());

    const lm::SampleSet train_set =
        lm::collect_group_samples(corpus, normed, train_ids, scheme);
    const lm::SampleSet val_set =
        lm::collect_group_samples(corpus, normed, val_ids, scheme);
    auto [params, train_report] = lm::fit(train_set, val_set, tc, init_seed, dims);
    lm::save_head(params, scheme, train_out);
    const std::string doc = train_report_json(train_report);
    if (train_report_path.empty()) std::cout << doc;
    else write_text_file(train_report_path, doc);
    return 0;
  }

  if (c_embed->parsed()) {
    const lm::Corpus corpus =
        lm::ingest(common.corpus_path, parse_format(common.format));
    const auto [params, scheme] = lm::load_head(embed_head);
    const lm::NormalizationConfig norm = resolve_norm(cfg, common.no_normalize);
    const std::vector<lm::NormalizedLyrics> normed =
        lm::normalize_corpus(corpus, norm);
    std::vector<std::pair<std::string, lm::NormalizedLyrics>> originals;
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      if (corpus.records[i].role == lm::Role::Original)
        originals.emplace_back(corpus.records[i].id, normed[i]);
    }
    const lm::EmbeddingIndex index = lm::build_index(originals, params, scheme);
    lm::save_index(index, embed_out);
    std::cout << "indexed=" << index.entries.size() << "\n";
    return 0;
  }

  if (c_rank->parsed()) {
    const auto [params, scheme] = lm::load_head(rank_head);
    const lm::EmbeddingIndex index = lm::load_index(rank_index);
    std::ifstream in(rank_query, std::ios::binary);
    if (!in) throw lm::IoError("cannot open " + rank_query);
    std::stringstream buf;
    buf << in.rdbuf();
    const lm::NormalizedLyrics query =
        lm::normalize(buf.str(), resolve_norm(cfg, common.no_normalize));
    const std::string qid =
        rank_query_id.empty() ? std::filesystem::path(rank_query).stem().string()
                              : rank_query_id;
    const lm::RankedResult result = lm::rank(qid, query, index, params, scheme);
    const std::string line = lm::ranked_result_json(result, rank_k) + "\n";
    if (rank_out.empty()) std::cout << line;
    else write_text_file(rank_out, line);
    return 0;
  }

  if (c_report->parsed()) {
    std::string table;
    bool first = true;
    for (const std::string& path : report_inputs) {
      std::ifstream in(path);
      if (!in) throw lm::IoError("cannot open " + path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw lm::ParseError(0, std::string(e.what()) + " in " + path);
      }
      lm::MetricsReport r;
      const std::string m = j.at("method").get<std::string>();
      r.method = m == "wer" ? lm::CvMethod::Wer
                 : m == "bow" ? lm::CvMethod::Bow
                 : m == "triplet" ? lm::CvMethod::Triplet
                                  : lm::CvMethod::Levenshtein;
      r.k = j.at("k").get<std::size_t>();
      r.map.mean = j.at("aggregate").at("map").at("mean").get<double>();
      r.map.stddev = j.at("aggregate").at("map").at("stddev").get<double>();
      r.mr.mean = j.at("aggregate").at("mean_rank").at("mean").get<double>();
      r.mr.stddev = j.at("aggregate").at("mean_rank").at("stddev").get<double>();
      r.p1.mean = j.at("aggregate").at("p_at_1").at("mean").get<double>();
      r.p1.stddev = j.at("aggregate").at("p_at_1").at("stddev").get<double>();
      const std::string row = lm::format_table({&r, 1});
      if (first) {
        table += row;
        first = false;
      } else {
        // keep a single header line
        table += row.substr(row.find('\n') + 1);
      }
    }
    if (report_out.empty()) std::cout << table;
    else write_text_file(report_out, table);
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
