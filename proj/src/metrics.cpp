#include "hflm/metrics.hpp"

#include <cmath>

namespace hflm {

namespace {

void require_same(const PanelSpec& a, const PanelSpec& b, const char* what) {
  if (!(a == b)) throw DomainError(std::string(what) + ": truth and estimate specs differ");
}

}  // namespace

double beta_r2(const CoefficientSurface& truth, const CoefficientSurface& estimate) {
  require_same(truth.spec(), estimate.spec(), "beta_r2");
  const Vector& b = truth.coefficients();
  const double mean = b.mean();
  const double total = (b.array() - mean).square().sum();
  if (!(total > 0.0)) throw DomainError("beta_r2: truth surface is constant");
  return 1.0 - (b - estimate.coefficients()).squaredNorm() / total;
}

double delta_bias(const LagFunction& truth, const LagFunction& estimate) {
  if (truth.delta.size() != estimate.delta.size()) throw DomainError("delta_bias: length mismatch");
  return estimate.delta.cast<double>().mean() - truth.delta.cast<double>().mean();
}

double delta_corr(const LagFunction& truth, const LagFunction& estimate) {
  if (truth.delta.size() != estimate.delta.size()) throw DomainError("delta_corr: length mismatch");
  const Eigen::ArrayXd a = truth.delta.cast<double>().array() - truth.delta.cast<double>().mean();
  const Eigen::ArrayXd b = estimate.delta.cast<double>().array() - estimate.delta.cast<double>().mean();
  const double saa = a.square().sum();
  const double sbb = b.square().sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) throw DomainError("delta_corr: constant sequence");
  return (a * b).sum() / std::sqrt(saa * sbb);
}

}  // namespace hflm
