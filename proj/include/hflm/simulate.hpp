#pragma once

#include "hflm/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hflm::simulate {

/// Nonnegative, periodic ground truth whose support per day is lags
/// 0..delta(t). Coefficients fall linearly from `amplitude` at lag 0 to zero
/// at lag delta(t)+1; delta(t) follows a raised cosine between lag_min and
/// lag_max that peaks at day center_t.
struct SmoothBump {
  double center_t = 0.0;
  double lag_min = 3.0;
  double lag_max = 18.0;
  double amplitude = 0.1;
};

struct FromFile {
  std::filesystem::path path;
};

using TruthRecipe = std::variant<SmoothBump, FromFile>;

CoefficientSurface synth_truth(const PanelSpec& spec, const TruthRecipe& recipe);

/// delta(t) that a SmoothBump recipe produces.
IndexVector bump_lags(const PanelSpec& spec, const SmoothBump& bump);

/// Seasonal synthetic daily rainfall (raw, mm/day): wet-day occurrence with
/// a cosine seasonal cycle and exponentially distributed depths.
SeriesPanel synthetic_rainfall(const PanelSpec& spec, std::uint64_t seed);

/// Noise variance giving R^2(y, y_true) = target_r2 for independent
/// additive noise: var(y_true) (1 - target) / target.
double calibrate_noise(const Vector& y_true, double target_r2);

struct SimulatedResponse {
  SeriesPanel y;      // raw kind; entries before the first design row are 0
  Vector y_true_rows;  // Z b_true, one entry per design row
  Vector y_rows;       // y_true_rows plus noise
};

SimulatedResponse simulate_response(const SeriesPanel& x, const CoefficientSurface& truth,
                                    double sigma2, std::uint64_t seed);

/// Noise-free Z b_true over the design rows.
Vector true_response(const SeriesPanel& x, const CoefficientSurface& truth);

struct Scenario {
  std::string name = "desk";
  SeriesPanel x;  // anomaly
  CoefficientSurface truth;
  double target_r2 = 0.8;
  int replicate_runs = 100;
  std::uint64_t seed = 0;
};

struct StudyRow {
  int replicate = 0;
  bool ok = false;
  std::string error;
  double beta_r2 = 0.0;
  double delta_bias = 0.0;
  std::optional<double> delta_corr;  // empty when the estimated delta is constant
  double r2_signal_check = 0.0;
  double sigma2 = 0.0;
  double q = 0.0;
  double w_h = 0.0;
  double w_v = 0.0;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double sigma2 = 0.0;
  int failed = 0;
  int delta_corr_undefined = 0;
  Summary beta_r2;
  Summary delta_bias;
  Summary delta_corr;
  Summary r2_signal_check;
};

/// Desk-scale scenario: T = 73, D = 20, n = 10, seasonally demeaned synthetic
/// rainfall drawn from `seed`, default SmoothBump truth (delta in [3, 18]).
Scenario desk_scenario(double target_r2, int replicate_runs, std::uint64_t seed);

/// Search box for desk-scale studies. The weights scale with the per-day
/// information in Z'Z, which is about e^2 smaller than for 40 years of daily
/// data, so both log-bounds on w_h sit 2 lower than the full-scale defaults.
FitConfig desk_fit_config();

/// Stream seed for replicate `index` of a study seeded with `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, int index);

Summary summarize(const std::vector<double>& values);

}  // namespace hflm::simulate
