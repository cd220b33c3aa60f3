#pragma once

#include "hflm/core.hpp"
#include "hflm/hyperopt.hpp"
#include "hflm/operators.hpp"
#include "hflm/simulate.hpp"
#include "hflm/sparsity.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hflm {

enum class SplitMode { train80_val20, train60_val20_test20 };

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Everything one run produces: the fit plus the intermediate artefacts the
/// CLI writes out (threshold curve, optimiser traces, timings).
struct PipelineReport {
  explicit PipelineReport(FitResult initial) : fit(std::move(initial)) {}

  FitResult fit;
  ThresholdCurve curve;
  std::optional<KneeResult> knee;
  std::vector<hyperopt::TraceEntry> smooth_trace;  // weights for the unthresholded fit
  std::vector<hyperopt::TraceEntry> sparse_trace;  // weights under the chosen support
  double w_h_smooth = 0.0;
  double w_v_smooth = 0.0;
  RowRange train_rows;
  RowRange validation_rows;
  RowRange fit_rows;  // rows of the final refit
  std::optional<RowRange> test_rows;
  std::optional<double> r2_test;
  std::vector<StageTiming> timings;
  std::vector<std::string> flags;
};

/// Smooth fit, group norms, threshold selection and sparse refit:
///  1. choose (w_h, w_v) by validation R^2 of the full-support fit;
///  2. fit the smooth surface on the training rows;
///  3. nested group norms;
///  4. q from the knee-onset of the whole-data threshold curve (or config.q);
///  5. re-choose the weights under that support and refit on all rows.
/// Training rows are the first 80% of design rows, validation the rest.
PipelineReport run_algorithm1(const SeriesPanel& x, const SeriesPanel& y, const FitConfig& config);

/// Same procedure on the first 80% of rows (60% train, 20% validation), then
/// R^2 on the final, untouched 20%.
PipelineReport evaluate_holdout(const SeriesPanel& x, const SeriesPanel& y, const FitConfig& config);

PipelineReport run_pipeline(const SeriesPanel& x, const SeriesPanel& y, const FitConfig& config,
                            SplitMode mode);

namespace simulate {

/// Fresh noise per replicate, full pipeline, metrics against the truth.
/// Replicate i draws from replicate_seed(scenario.seed, i); failures are
/// recorded and excluded from the summary. A constant estimated delta leaves
/// only that replicate's delta_corr out.
StudyResult run_study(const Scenario& scenario, const FitConfig& config);

}  // namespace simulate

}  // namespace hflm
