#pragma once

#include "hflm/config.hpp"

#include <iosfwd>
#include <optional>

namespace hflm::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericalError = 4,
};

struct Overrides {
  std::optional<double> q;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

/// Applies command-line overrides; threads fall back to the hardware count
/// when neither the file nor the command line sets them.
void apply_overrides(RunConfig& config, const Overrides& overrides);

/// Writes surface.csv, delta.csv, curve.csv, trace_smooth.csv,
/// trace_sparse.csv, seasonal_means.csv and manifest.json to output_dir.
int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Writes study.csv and summary.json to output_dir.
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Prints the metric report JSON on `out`.
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Full command line: hflm fit|simulate|eval --config <path> [--q] [--threads] [--seed].
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log);

}  // namespace hflm::cli
