#pragma once

#include "hflm/core.hpp"
#include "hflm/ingest.hpp"
#include "hflm/pipeline.hpp"
#include "hflm/simulate.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hflm::cli {

enum class TruthKind { smooth_bump, from_file };

/// Contents of a key=value run file. One file drives any of the commands;
/// keys that a command does not use are accepted and ignored by it.
struct RunConfig {
  std::filesystem::path output_dir = ".";
  FitConfig fit;

  // fit
  std::optional<std::filesystem::path> data_path;
  ingest::CsvSchema schema;
  double rain_snow_threshold = 0.0;
  Index max_lag = 150;
  SplitMode split_mode = SplitMode::train80_val20;

  // simulate
  std::string scenario_name = "desk";
  double target_r2 = 0.8;
  int replicate_runs = 100;
  TruthKind truth_kind = TruthKind::smooth_bump;
  std::optional<std::filesystem::path> truth_path;
  simulate::SmoothBump bump;
  std::optional<std::filesystem::path> rainfall_path;
  Index period_length = 365;
  Index replicate_count = 40;

  // eval
  std::optional<std::filesystem::path> truth_surface;
  std::optional<std::filesystem::path> estimate_surface;
  std::optional<std::filesystem::path> truth_delta;
  std::optional<std::filesystem::path> estimate_delta;

  /// Every key as written (after path resolution), for the run manifest.
  std::vector<std::pair<std::string, std::string>> entries;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown or repeated
/// keys and malformed values throw ConfigError naming the key. Relative
/// paths are resolved against `base_dir`.
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// The key names parse_run_config accepts.
const std::vector<std::string>& known_keys();

std::string to_string(SplitMode mode);

}  // namespace hflm::cli
