#include <doctest.h>

#include <sstream>
#include <string>

#include "lyricmatch/configfile.hpp"
#include "lyricmatch/errors.hpp"

using namespace lyricmatch;

namespace {

ConfigFile parse_text(const std::string& text) {
  std::istringstream in(text);
  return ConfigFile::parse(in);
}

}  // namespace

TEST_CASE("config parses sections, comments and whitespace") {
  const ConfigFile cfg = parse_text(
      "# leading comment\n"
      "top = 1\n"
      "[training]\n"
      "margin = 0.3   ; trailing comment\n"
      "  seed=42\n"
      "\n"
      "[ features ]\n"
      "dim = 512\n");
  CHECK(cfg.get("", "top") == std::optional<std::string>("1"));
  CHECK(cfg.get("training", "margin") == std::optional<std::string>("0.3"));
  CHECK(cfg.get("training", "seed") == std::optional<std::string>("42"));
  CHECK(cfg.get("features", "dim") == std::optional<std::string>("512"));
  CHECK(!cfg.get("training", "missing").has_value());
  CHECK(!cfg.get("nowhere", "margin").has_value());
}

TEST_CASE("later duplicate keys win") {
  const ConfigFile cfg = parse_text("[a]\nx = 1\nx = 2\n");
  CHECK(cfg.get("a", "x") == std::optional<std::string>("2"));
}

TEST_CASE("malformed lines report their line number") {
  CHECK_THROWS_WITH_AS(parse_text("[training\n"),
                       doctest::Contains("line 1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text("ok = 1\njust words\n"),
                       doctest::Contains("line 2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_text("[]\n"), doctest::Contains("line 1"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_text("[s]\n= value\n"),
                       doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("typed getters convert or fall back") {
  const ConfigFile cfg = parse_text(
      "[t]\n"
      "yes1 = true\nyes2 = ON\nno1 = 0\nno2 = No\n"
      "num = 2.5\nint = 31\nbadnum = 2.5x\nbadbool = maybe\n"
      "list = a, b , ,c\n");
  CHECK(cfg.get_bool("t", "yes1", false));
  CHECK(cfg.get_bool("t", "yes2", false));
  CHECK(!cfg.get_bool("t", "no1", true));
  CHECK(!cfg.get_bool("t", "no2", true));
  CHECK(cfg.get_bool("t", "absent", true));
  CHECK(cfg.get_double("t", "num", 0.0) == 2.5);
  CHECK(cfg.get_double("t", "absent", 7.25) == 7.25);
  CHECK(cfg.get_u64("t", "int", 0) == 31);
  CHECK(cfg.get_u64("t", "absent", 9) == 9);
  CHECK(cfg.get_list("t", "list") == std::vector<std::string>{"a", "b", "c"});
  CHECK(cfg.get_list("t", "absent").empty());
  CHECK_THROWS_AS(cfg.get_bool("t", "badbool", false), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("t", "badnum", 0.0), ConfigError);
  CHECK_THROWS_AS(cfg.get_u64("t", "num", 0), ConfigError);
}

TEST_CASE("normalization settings map onto the config struct") {
  const NormalizationConfig defaults;
  CHECK(parse_text("").normalization().lowercase == defaults.lowercase);

  const ConfigFile cfg = parse_text(
      "[normalization]\n"
      "strip_section_tags = false\n"
      "lowercase = false\n"
      "filler_patterns = la, na na\n");
  const NormalizationConfig n = cfg.normalization();
  CHECK(!n.strip_section_tags);
  CHECK(!n.lowercase);
  CHECK(n.unicode_fold == defaults.unicode_fold);
  CHECK(n.filler_patterns == std::vector<std::string>{"la", "na na"});

  CHECK_THROWS_AS(parse_text("[normalization]\n"
                             "drop_filler_lines = true\n"
                             "filler_patterns =\n")
                      .normalization(),
                  ConfigError);
}

TEST_CASE("training settings map onto the config struct") {
  const ConfigFile cfg = parse_text(
      "[training]\n"
      "margin = 0.25\n"
      "batch_groups = 8\n"
      "samples_per_group = 3\n"
      "mining = semi_hard\n"
      "learning_rate = 0.01\n"
      "lr_reduce_factor = 0.25\n"
      "lr_patience = 4\n"
      "early_stop_patience = 9\n"
      "min_delta = 0.001\n"
      "max_epochs = 17\n"
      "seed = 123\n");
  const TrainConfig t = cfg.training();
  CHECK(t.margin == 0.25);
  CHECK(t.batch_groups == 8);
  CHECK(t.samples_per_group == 3);
  CHECK(t.mining == MiningStrategy::SemiHard);
  CHECK(t.learning_rate == 0.01);
  CHECK(t.lr_reduce_factor == 0.25);
  CHECK(t.lr_patience == 4);
  CHECK(t.early_stop_patience == 9);
  CHECK(t.min_delta == 0.001);
  CHECK(t.max_epochs == 17);
  CHECK(t.seed == 123);

  CHECK(parse_text("[training]\nmining = batch_all\n").training().mining ==
        MiningStrategy::BatchAll);
  CHECK(parse_text("[training]\nmining = batch_hard\n").training().mining ==
        MiningStrategy::BatchHard);
  CHECK_THROWS_WITH_AS(parse_text("[training]\nmining = hardest\n").training(),
                       doctest::Contains("hardest"), ConfigError);
}

TEST_CASE("feature and model settings validate their ranges") {
  const ConfigFile cfg = parse_text(
      "[features]\nseed = 5\nn_min = 2\nn_max = 4\ndim = 1024\n"
      "[model]\nf = 1024\nh1 = 64\nh2 = 32\ne = 16\n");
  const FeatureScheme s = cfg.feature_scheme();
  CHECK(s.seed == 5);
  CHECK(s.n_min == 2);
  CHECK(s.n_max == 4);
  CHECK(s.dim == 1024);
  const HeadDims d = cfg.head_dims();
  CHECK(d.f == 1024);
  CHECK(d.h1 == 64);
  CHECK(d.h2 == 32);
  CHECK(d.e == 16);

  CHECK_THROWS_AS(parse_text("[features]\nn_min = 5\nn_max = 3\n").feature_scheme(),
                  ConfigError);
  CHECK_THROWS_AS(parse_text("[features]\ndim = 0\n").feature_scheme(),
                  ConfigError);
  CHECK_THROWS_AS(parse_text("[model]\nh1 = 0\n").head_dims(), ConfigError);
}

TEST_CASE("load reports unreadable paths") {
  CHECK_THROWS_AS(ConfigFile::load("/nonexistent/path/config.ini"), IoError);
}
