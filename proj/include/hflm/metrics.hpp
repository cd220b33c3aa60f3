#pragma once

#include "hflm/core.hpp"

#include <optional>

namespace hflm {

/// 1 - sum (obs - pred)^2 / sum (obs - mean obs)^2.
template <class DerivedA, class DerivedB>
double r2(const Eigen::MatrixBase<DerivedA>& observed, const Eigen::MatrixBase<DerivedB>& predicted) {
  if (observed.size() != predicted.size()) throw DomainError("r2: length mismatch");
  if (observed.size() < 2) throw DomainError("r2: need at least two observations");
  const double mean = observed.mean();
  const double total = (observed.array() - mean).square().sum();
  if (!(total > 0.0)) throw DomainError("r2: observed series has zero variance");
  return 1.0 - (observed - predicted).squaredNorm() / total;
}

/// Coefficient-surface R^2, grid sums in place of the double integrals.
double beta_r2(const CoefficientSurface& truth, const CoefficientSurface& estimate);

/// mean(estimate) - mean(truth), sentinel entries included as -1.
double delta_bias(const LagFunction& truth, const LagFunction& estimate);

/// Pearson correlation of the two lag functions over t.
double delta_corr(const LagFunction& truth, const LagFunction& estimate);

struct MetricReport {
  std::optional<double> r2;
  std::optional<double> beta_r2;
  std::optional<double> delta_bias;
  std::optional<double> delta_corr;
};

}  // namespace hflm
