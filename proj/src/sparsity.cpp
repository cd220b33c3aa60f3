#include "hflm/sparsity.hpp"

#include "hflm/metrics.hpp"
#include "hflm/parallel.hpp"
#include "hflm/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hflm {

GroupNormGrid group_norms(const CoefficientSurface& surface) {
  const auto& spec = surface.spec();
  const Index D = spec.max_lag_count();
  GroupNormGrid out{spec, surface.grid().array().square().matrix()};
  for (Index s = D - 2; s >= 0; --s) out.G.row(s) += out.G.row(s + 1);
  return out;
}

Mask apply_threshold(const GroupNormGrid& norms, double q) {
  if (!(q >= 0.0)) throw DomainError("threshold q must be >= 0");
  const auto& spec = norms.spec;
  const Index D = spec.max_lag_count();
  Mask support(static_cast<std::size_t>(spec.coefficient_count()), false);
  for (Index t = 0; t < spec.period_length(); ++t) {
    Index cut = 0;
    while (cut < D && !(norms.G(cut, t) < q)) ++cut;
    for (Index s = 0; s < cut; ++s) support[static_cast<std::size_t>(flat_index(s, t, spec))] = true;
  }
  return support;
}

LagFunction extract_delta(const Mask& support, const PanelSpec& spec) {
  if (static_cast<Index>(support.size()) != spec.coefficient_count()) {
    throw DomainError("support length must equal D*T");
  }
  const Index D = spec.max_lag_count();
  LagFunction lf{spec, IndexVector::Constant(spec.period_length(), LagFunction::kNoLag)};
  for (Index t = 0; t < spec.period_length(); ++t) {
    Index kept = 0;
    while (kept < D && support[static_cast<std::size_t>(flat_index(kept, t, spec))]) ++kept;
    for (Index s = kept; s < D; ++s) {
      if (support[static_cast<std::size_t>(flat_index(s, t, spec))]) {
        throw DomainError("support at day " + std::to_string(t) + " is not an upper-tail pattern");
      }
    }
    lf.delta[t] = kept - 1;
  }
  return lf;
}

Vector threshold_grid(const GroupNormGrid& norms, int grid_size) {
  if (grid_size < 2) throw DomainError("threshold grid needs at least two points");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Index i = 0; i < norms.G.size(); ++i) {
    const double g = norms.G.data()[i];
    if (g > 0.0) {
      lo = std::min(lo, g);
      hi = std::max(hi, g);
    }
  }
  if (!(hi > 0.0)) throw DomainError("nothing to threshold: surface is identically zero");
  if (lo == hi) lo = hi * 1e-3;
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / (grid_size - 1);
  Vector grid(grid_size);
  for (int i = 0; i < grid_size; ++i) grid[i] = std::exp(log_lo + step * i);
  grid[0] = lo;
  grid[grid_size - 1] = hi;
  return grid;
}

ThresholdCurve threshold_curve(const DesignSystem& design, const GramSystem& gram,
                               const PenaltySet& penalties, double w_h, double w_v,
                               const CoefficientSurface& surface, int grid_size, double rel_tol,
                               int threads) {
  const auto norms = group_norms(surface);
  ThresholdCurve curve{threshold_grid(norms, grid_size), Vector(grid_size),
                       std::vector<Index>(static_cast<std::size_t>(grid_size))};
  const Vector observed = design.Y.segment(gram.rows.begin, gram.rows.size());

  SolverOptions opts;
  opts.rel_tol = rel_tol;
  std::vector<SpdSolver> solvers;
  for (int w = 0; w < std::max(threads, 1); ++w) solvers.emplace_back(opts);

  parallel_for(static_cast<std::size_t>(grid_size), threads, [&](std::size_t i, std::size_t worker) {
    const Mask support = apply_threshold(norms, curve.q_grid[static_cast<Index>(i)]);
    const auto kept = std::count(support.begin(), support.end(), true);
    curve.support_sizes[i] = static_cast<Index>(kept);
    if (kept == 0) {
      curve.r2[static_cast<Index>(i)] = r2(observed, Vector::Zero(observed.size()));
      return;
    }
    const auto refit = fit_surface(gram, penalties, w_h, w_v, support, solvers[worker]);
    curve.r2[static_cast<Index>(i)] = r2(observed, predict(design, refit.coefficients(), gram.rows));
  });
  return curve;
}

namespace {

// Height of a peak above the higher of the two lowest points reachable on
// either side before meeting a strictly higher value.
double prominence(const Vector& d, Index peak) {
  const double h = d[peak];
  double left_min = h;
  for (Index i = peak - 1; i >= 0 && d[i] <= h; --i) left_min = std::min(left_min, d[i]);
  double right_min = h;
  for (Index i = peak + 1; i < d.size() && d[i] <= h; ++i) right_min = std::min(right_min, d[i]);
  return h - std::max(left_min, right_min);
}

double menger_curvature(double x1, double y1, double x2, double y2, double x3, double y3) {
  const double area2 = std::abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1));
  const double a = std::hypot(x2 - x1, y2 - y1);
  const double b = std::hypot(x3 - x2, y3 - y2);
  const double c = std::hypot(x3 - x1, y3 - y1);
  const double denom = a * b * c;
  return denom > 0.0 ? 2.0 * area2 / denom : 0.0;
}

}  // namespace

namespace {

// Kneedle: interior local maxima of the difference curve with enough
// prominence, in ascending index order.
std::vector<Index> kneedle(const Vector& values, double prominence_floor) {
  const Index n = values.size();
  const double vmax = values.maxCoeff();
  const double vmin = values.minCoeff();
  std::vector<Index> knees;
  if (!(vmax > vmin)) return knees;

  Vector diff(n);
  for (Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    const double y = (values[i] - vmin) / (vmax - vmin);
    // Height of the decreasing curve above the chord from (0,1) to (1,0).
    diff[i] = y + x - 1.0;
  }
  for (Index i = 1; i + 1 < n; ++i) {
    if (!(diff[i] > diff[i - 1])) continue;
    Index j = i;
    while (j + 1 < n && diff[j + 1] == diff[i]) ++j;  // plateau
    if (j + 1 < n && diff[j + 1] < diff[i] && prominence(diff, i) >= prominence_floor) {
      knees.push_back(i);
    }
    i = j;
  }
  return knees;
}

}  // namespace

KneeResult knee_onset(const Vector& values, double prominence_floor) {
  const Index n = values.size();
  if (n < 5) throw DomainError("knee detection needs at least 5 points");
  if (!(values.maxCoeff() > values.minCoeff())) throw DomainError("no knee: constant curve");

  KneeResult result;
  const auto knees = kneedle(values, prominence_floor);
  if (!knees.empty()) {
    result.index = knees.front();
    result.knee_count = static_cast<Index>(knees.size());
    return result;
  }

  result.fallback = true;
  const double vmax = values.maxCoeff();
  const double vmin = values.minCoeff();
  auto px = [&](Index i) { return static_cast<double>(i) / static_cast<double>(n - 1); };
  auto py = [&](Index i) { return (values[i] - vmin) / (vmax - vmin); };
  // Curvatures within rounding of each other tie; the smallest index wins, so
  // a straight line lands next to its first endpoint.
  double best = -1.0;
  for (Index i = 1; i + 1 < n; ++i) {
    const double c = menger_curvature(px(0), py(0), px(i), py(i), px(n - 1), py(n - 1));
    if (c > best + 1e-12) {
      best = c;
      result.index = i;
    }
  }
  return result;
}

KneeResult knee_onset(const ThresholdCurve& curve, double prominence_floor) {
  auto result = knee_onset(curve.r2, prominence_floor);
  result.q = curve.q_grid[result.index];
  return result;
}

}  // namespace hflm
