#include "hflm/core.hpp"

#include <cmath>
#include <string>

namespace hflm {

PanelSpec::PanelSpec(Index period_length, Index max_lag_count, Index replicate_count)
    : period_(period_length), lags_(max_lag_count), replicates_(replicate_count) {
  if (period_ < 1 || lags_ < 1 || replicates_ < 1) {
    throw DomainError("panel dimensions must be positive (T=" + std::to_string(period_) +
                      ", D=" + std::to_string(lags_) + ", n=" + std::to_string(replicates_) + ")");
  }
  if (lags_ > observation_count()) {
    throw DomainError("max lag count D=" + std::to_string(lags_) +
                      " exceeds observation count N=" + std::to_string(observation_count()));
  }
}

Index flat_index(Index lag, Index day, const PanelSpec& spec) {
  if (lag < 0 || lag >= spec.max_lag_count()) {
    throw IndexError("lag " + std::to_string(lag) + " outside [0, " +
                     std::to_string(spec.max_lag_count()) + ")");
  }
  if (day < 0 || day >= spec.period_length()) {
    throw IndexError("day " + std::to_string(day) + " outside [0, " +
                     std::to_string(spec.period_length()) + ")");
  }
  return day * spec.max_lag_count() + lag;
}

std::pair<Index, Index> lag_day(Index k, const PanelSpec& spec) {
  if (k < 0 || k >= spec.coefficient_count()) {
    throw IndexError("flat index " + std::to_string(k) + " outside [0, " +
                     std::to_string(spec.coefficient_count()) + ")");
  }
  return {k % spec.max_lag_count(), k / spec.max_lag_count()};
}

std::vector<std::string> validate_panel(const SeriesPanel& panel) {
  std::vector<std::string> violations;
  const auto& spec = panel.spec;
  if (panel.values.size() != spec.observation_count()) {
    violations.push_back("length mismatch: expected " + std::to_string(spec.observation_count()) +
                         ", got " + std::to_string(panel.values.size()));
    return violations;
  }
  bool finite = true;
  for (Index i = 0; i < panel.values.size(); ++i) {
    if (!std::isfinite(panel.values[i])) {
      violations.push_back("non-finite at index " + std::to_string(i));
      finite = false;
    }
  }
  if (finite && panel.kind == SeriesKind::anomaly) {
    const Index T = spec.period_length();
    const Index n = spec.replicate_count();
    for (Index t = 0; t < T; ++t) {
      double mean = 0.0;
      for (Index i = 0; i < n; ++i) mean += panel.values[i * T + t];
      mean /= static_cast<double>(n);
      if (std::abs(mean) > 1e-10) {
        violations.push_back("seasonal mean nonzero at day " + std::to_string(t) + " (" +
                             std::to_string(mean) + ")");
      }
    }
  }
  return violations;
}

CoefficientSurface::CoefficientSurface(const PanelSpec& spec)
    : spec_(spec), b_(Vector::Zero(spec.coefficient_count())) {}

CoefficientSurface::CoefficientSurface(const PanelSpec& spec, Vector b)
    : spec_(spec), b_(std::move(b)) {
  if (b_.size() != spec_.coefficient_count()) {
    throw DomainError("surface length " + std::to_string(b_.size()) + " does not match D*T = " +
                      std::to_string(spec_.coefficient_count()));
  }
  if (!b_.allFinite()) throw DomainError("surface has non-finite coefficients");
}

LagFunction lag_function_of(const CoefficientSurface& surface) {
  const auto& spec = surface.spec();
  LagFunction lf{spec, IndexVector::Constant(spec.period_length(), LagFunction::kNoLag)};
  for (Index t = 0; t < spec.period_length(); ++t) {
    for (Index s = spec.max_lag_count() - 1; s >= 0; --s) {
      if (surface(s, t) != 0.0) {
        lf.delta[t] = s;
        break;
      }
    }
  }
  return lf;
}

void FitConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (w_h && !(*w_h > 0.0)) fail("w_h must be > 0");
  if (w_v && !(*w_v > 0.0)) fail("w_v must be > 0");
  if (w_h.has_value() != w_v.has_value()) fail("w_h and w_v must be fixed together");
  if (q && !(*q >= 0.0)) fail("q must be >= 0");
  if (!(solver_rel_tol > 0.0)) fail("solver_rel_tol must be > 0");
  if (hyperopt_init_count < 1) fail("hyperopt_init_count must be >= 1");
  if (hyperopt_iter_count < 1) fail("hyperopt_iter_count must be >= 1");
  if (!(log_wh_bounds.lower < log_wh_bounds.upper)) fail("log_wh bounds must be ordered");
  if (!(log_wv_bounds.lower < log_wv_bounds.upper)) fail("log_wv bounds must be ordered");
  if (threshold_grid_size < 5) fail("threshold_grid_size must be >= 5");
  if (threads < 1) fail("threads must be >= 1");
}

}  // namespace hflm
