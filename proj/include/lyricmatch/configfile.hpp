#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lyricmatch/embedding.hpp"
#include "lyricmatch/textnorm.hpp"
#include "lyricmatch/training.hpp"

namespace lyricmatch {

// key=value file with [section] headers; '#' and ';' start comments.
class ConfigFile {
 public:
  ConfigFile() = default;
  static ConfigFile parse(std::istream& in);
  static ConfigFile load(const std::filesystem::path& path);

  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key) const;

  NormalizationConfig normalization() const;
  TrainConfig training() const;
  FeatureScheme feature_scheme() const;
  HeadDims head_dims() const;

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace lyricmatch
