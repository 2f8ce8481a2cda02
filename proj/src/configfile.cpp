#include "lyricmatch/configfile.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "lyricmatch/errors.hpp"

namespace lyricmatch {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

ConfigFile ConfigFile::parse(std::istream& in) {
  ConfigFile cfg;
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse(in);
}

std::optional<std::string> ConfigFile::get(const std::string& section,
                                           const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("bad boolean for " + section + "." + key + ": " + *v);
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  try {
    std::size_t end = 0;
    const double d = std::stod(*v, &end);
    if (end != v->size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + section + "." + key + ": " + *v);
  }
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
  auto v = get(section, key);
  if (!v) return fallback;
  try {
    std::size_t end = 0;
    const std::uint64_t u = std::stoull(*v, &end);
    if (end != v->size()) throw std::invalid_argument("trailing characters");
    return u;
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + section + "." + key + ": " + *v);
  }
}

std::vector<std::string> ConfigFile::get_list(const std::string& section,
                                              const std::string& key) const {
  auto v = get(section, key);
  if (!v) return {};
  std::vector<std::string> out;
  std::stringstream ss(*v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

NormalizationConfig ConfigFile::normalization() const {
  NormalizationConfig n;
  n.strip_section_tags = get_bool("normalization", "strip_section_tags", n.strip_section_tags);
  n.drop_filler_lines = get_bool("normalization", "drop_filler_lines", n.drop_filler_lines);
  n.lowercase = get_bool("normalization", "lowercase", n.lowercase);
  n.unicode_fold = get_bool("normalization", "unicode_fold", n.unicode_fold);
  n.collapse_whitespace = get_bool("normalization", "collapse_whitespace", n.collapse_whitespace);
  n.strip_punctuation = get_bool("normalization", "strip_punctuation", n.strip_punctuation);
  if (auto v = get("normalization", "filler_patterns"))
    n.filler_patterns = get_list("normalization", "filler_patterns");
  if (n.drop_filler_lines && n.filler_patterns.empty())
    throw ConfigError("drop_filler_lines requires a non-empty filler_patterns list");
  return n;
}

TrainConfig ConfigFile::training() const {
  TrainConfig t;
  t.margin = get_double("training", "margin", t.margin);
  t.batch_groups = static_cast<std::size_t>(get_u64("training", "batch_groups", t.batch_groups));
  t.samples_per_group = static_cast<std::size_t>(
      get_u64("training", "samples_per_group", t.samples_per_group));
  if (auto v = get("training", "mining")) {
    if (*v == "batch_all") t.mining = MiningStrategy::BatchAll;
    else if (*v == "batch_hard") t.mining = MiningStrategy::BatchHard;
    else if (*v == "semi_hard") t.mining = MiningStrategy::SemiHard;
    else throw ConfigError("unknown mining strategy: " + *v);
  }
  t.learning_rate = get_double("training", "learning_rate", t.learning_rate);
  t.lr_reduce_factor = get_double("training", "lr_reduce_factor", t.lr_reduce_factor);
  t.lr_patience = static_cast<std::size_t>(get_u64("training", "lr_patience", t.lr_patience));
  t.early_stop_patience = static_cast<std::size_t>(
      get_u64("training", "early_stop_patience", t.early_stop_patience));
  t.min_delta = get_double("training", "min_delta", t.min_delta);
  t.max_epochs = static_cast<std::size_t>(get_u64("training", "max_epochs", t.max_epochs));
  t.seed = get_u64("training", "seed", t.seed);
  return t;
}

FeatureScheme ConfigFile::feature_scheme() const {
  FeatureScheme s;
  s.seed = get_u64("features", "seed", s.seed);
  s.n_min = static_cast<std::uint32_t>(get_u64("features", "n_min", s.n_min));
  s.n_max = static_cast<std::uint32_t>(get_u64("features", "n_max", s.n_max));
  s.dim = static_cast<std::uint32_t>(get_u64("features", "dim", s.dim));
  if (s.n_min == 0 || s.n_min > s.n_max)
    throw ConfigError("features: need 1 <= n_min <= n_max");
  if (s.dim == 0) throw ConfigError("features: dim must be positive");
  return s;
}

HeadDims ConfigFile::head_dims() const {
  HeadDims d;
  d.f = static_cast<std::uint32_t>(get_u64("model", "f", d.f));
  d.h1 = static_cast<std::uint32_t>(get_u64("model", "h1", d.h1));
  d.h2 = static_cast<std::uint32_t>(get_u64("model", "h2", d.h2));
  d.e = static_cast<std::uint32_t>(get_u64("model", "e", d.e));
  if (d.f == 0 || d.h1 == 0 || d.h2 == 0 || d.e == 0)
    throw ConfigError("model: dimensions must be positive");
  return d;
}

}  // namespace lyricmatch
