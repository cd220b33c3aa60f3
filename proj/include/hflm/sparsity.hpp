#pragma once

#include "hflm/core.hpp"
#include "hflm/operators.hpp"

#include <vector>

namespace hflm {

/// Nested tail group norms: G(s,t) = sum_{s' >= s} beta(s',t)^2, stored
/// D x T. Non-increasing in s for every t.
struct GroupNormGrid {
  PanelSpec spec;
  Eigen::MatrixXd G;
};

GroupNormGrid group_norms(const CoefficientSurface& surface);

/// Zeroes every nested group whose squared norm is below q. Because groups
/// are nested, the zeroed set per day is an upper tail of lags.
Mask apply_threshold(const GroupNormGrid& norms, double q);

/// delta(t) = largest kept lag, or LagFunction::kNoLag. Throws DomainError
/// if the support is not an upper-tail pattern.
LagFunction extract_delta(const Mask& support, const PanelSpec& spec);

struct ThresholdCurve {
  Vector q_grid;
  Vector r2;
  std::vector<Index> support_sizes;
};

/// Geometric grid of `grid_size` thresholds spanning the positive group
/// norms, smallest to largest.
Vector threshold_grid(const GroupNormGrid& norms, int grid_size);

/// R^2 over `gram.rows` of the support-constrained refit at each grid
/// threshold. Zero support gives the empty model's R^2.
ThresholdCurve threshold_curve(const DesignSystem& design, const GramSystem& gram,
                               const PenaltySet& penalties, double w_h, double w_v,
                               const CoefficientSurface& surface, int grid_size = 50,
                               double rel_tol = 1e-10, int threads = 1);

struct KneeResult {
  Index index = 0;
  double q = 0.0;
  bool fallback = false;  // no Kneedle peak; Menger curvature used
  Index knee_count = 0;
};

/// Knee-onset of a decreasing q-vs-R^2 curve. Knees are Kneedle peaks whose
/// difference-curve prominence reaches `prominence_floor`; the first (smallest
/// q) one wins. No knee at all falls back to maximum Menger curvature.
KneeResult knee_onset(const ThresholdCurve& curve, double prominence_floor = 0.01);

/// Same, on a bare sequence of values (index is the abscissa).
KneeResult knee_onset(const Vector& values, double prominence_floor = 0.01);

}  // namespace hflm
