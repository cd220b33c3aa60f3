#include "hflm/simulate.hpp"

#include "hflm/ingest.hpp"
#include "hflm/io.hpp"
#include "hflm/operators.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hflm::simulate {

IndexVector bump_lags(const PanelSpec& spec, const SmoothBump& bump) {
  const Index T = spec.period_length();
  IndexVector lags(T);
  for (Index t = 0; t < T; ++t) {
    const double phase = 2.0 * std::numbers::pi * (static_cast<double>(t) - bump.center_t) /
                         static_cast<double>(T);
    const double level = 0.5 * (1.0 + std::cos(phase));
    lags[t] = static_cast<Index>(std::lround(bump.lag_min + (bump.lag_max - bump.lag_min) * level));
  }
  return lags;
}

CoefficientSurface synth_truth(const PanelSpec& spec, const TruthRecipe& recipe) {
  if (const auto* file = std::get_if<FromFile>(&recipe)) {
    auto surface = io::read_surface_csv(file->path);
    if (!(surface.spec().max_lag_count() == spec.max_lag_count() &&
          surface.spec().period_length() == spec.period_length())) {
      throw DataError("truth surface " + file->path.string() + " does not match D=" +
                      std::to_string(spec.max_lag_count()) + ", T=" +
                      std::to_string(spec.period_length()));
    }
    return CoefficientSurface(spec, surface.coefficients());
  }

  const auto& bump = std::get<SmoothBump>(recipe);
  if (!(bump.amplitude > 0.0)) throw DomainError("smooth_bump amplitude must be > 0");
  if (bump.lag_min < 0.0 || bump.lag_max < bump.lag_min ||
      std::lround(bump.lag_max) > spec.max_lag_count() - 1) {
    throw DomainError("smooth_bump lags must satisfy 0 <= lag_min <= lag_max <= D-1");
  }
  const IndexVector lags = bump_lags(spec, bump);
  CoefficientSurface surface(spec);
  for (Index t = 0; t < spec.period_length(); ++t) {
    const double span = static_cast<double>(lags[t] + 1);
    for (Index s = 0; s <= lags[t]; ++s) {
      surface(s, t) = bump.amplitude * (1.0 - static_cast<double>(s) / span);
    }
  }
  return surface;
}

SeriesPanel synthetic_rainfall(const PanelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> depth(1.0 / 8.0);
  const Index T = spec.period_length();
  SeriesPanel panel{spec, Vector(spec.observation_count()), SeriesKind::raw};
  for (Index u = 0; u < spec.observation_count(); ++u) {
    const double season = std::cos(2.0 * std::numbers::pi * static_cast<double>(u % T) /
                                   static_cast<double>(T));
    const double wet_probability = 0.35 + 0.25 * season;
    const double wet = unit(rng);
    const double amount = depth(rng);
    panel.values[u] = wet < wet_probability ? amount : 0.0;
  }
  return panel;
}

double calibrate_noise(const Vector& y_true, double target_r2) {
  if (!(target_r2 > 0.0 && target_r2 < 1.0)) throw DomainError("target R^2 must lie in (0, 1)");
  if (y_true.size() < 2) throw DomainError("calibrate_noise: need at least two values");
  const double variance = (y_true.array() - y_true.mean()).square().mean();
  if (!(variance > 0.0)) throw DomainError("calibrate_noise: true response has zero variance");
  return variance * (1.0 - target_r2) / target_r2;
}

Vector true_response(const SeriesPanel& x, const CoefficientSurface& truth) {
  if (!(x.spec == truth.spec())) throw DomainError("driver panel and truth surface specs differ");
  SeriesPanel zero_y{x.spec, Vector::Zero(x.spec.observation_count()), SeriesKind::anomaly};
  SeriesPanel x_view{x.spec, x.values, SeriesKind::anomaly};
  const auto design = build_design(x_view, zero_y);
  return design.Z * truth.coefficients();
}

SimulatedResponse simulate_response(const SeriesPanel& x, const CoefficientSurface& truth,
                                    double sigma2, std::uint64_t seed) {
  if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be >= 0");
  SimulatedResponse out{SeriesPanel{x.spec, Vector::Zero(x.spec.observation_count()), SeriesKind::raw},
                        true_response(x, truth), {}};
  out.y_rows = out.y_true_rows;
  if (sigma2 > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    for (Index r = 0; r < out.y_rows.size(); ++r) out.y_rows[r] += noise(rng);
  }
  out.y.values.tail(out.y_rows.size()) = out.y_rows;
  return out;
}

Scenario desk_scenario(double target_r2, int replicate_runs, std::uint64_t seed) {
  const PanelSpec spec(73, 20, 10);
  auto [x, means] = ingest::seasonal_demean(synthetic_rainfall(spec, seed));
  return Scenario{"desk", std::move(x), synth_truth(spec, SmoothBump{}), target_r2, replicate_runs,
                  seed};
}

FitConfig desk_fit_config() {
  FitConfig config;
  config.log_wh_bounds = {8.0, 18.0};
  return config;
}

std::uint64_t replicate_seed(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

}  // namespace hflm::simulate
