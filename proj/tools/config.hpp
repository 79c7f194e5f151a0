#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <cogmtl/eval.hpp>
#include <cogmtl/synth.hpp>

namespace cogmtl::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::filesystem::path> out;
};

/// Everything a run needs, parsed and validated from an INI file.
/// Relative paths are resolved against the config file's directory.
struct RunConfig {
  std::filesystem::path source;
  std::string hash;  // FNV-1a of the file bytes plus result-affecting overrides

  std::filesystem::path features;
  std::filesystem::path targets;
  std::filesystem::path blockmap;

  std::vector<Method> methods{Method::AllEN};
  std::vector<Harmonization> harmonizations{Harmonization::None};
  PartitionScheme partition = PartitionScheme::ByGroup;
  std::vector<std::string> horizons;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out_dir = ".";
  CvOptions cv;

  SynthSpec synth;
  Harmonization harmonize_method = Harmonization::ComBat;
  Index harmonize_components = 5;
  std::vector<std::pair<std::string, double>> fixed;  // fit-time hyperparameters
  std::filesystem::path model;
  std::filesystem::path report;

  /// Throws ConfigError when the seed is absent.
  [[nodiscard]] std::uint64_t require_seed(const char* command) const;
};

/// Throws ConfigError on unreadable files, unknown sections/keys, or invalid values.
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides);

}  // namespace cogmtl::cli
