#pragma once

#include "hflm/core.hpp"
#include "hflm/operators.hpp"

#include <Eigen/Dense>

#include <random>

namespace hflm::fixture {

inline SeriesPanel random_anomaly(const PanelSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(spec.observation_count());
  for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  // Remove day-of-year means so the panel is a valid anomaly series.
  const Index T = spec.period_length();
  for (Index t = 0; t < T; ++t) {
    double mean = 0.0;
    for (Index i = 0; i < spec.replicate_count(); ++i) mean += v[i * T + t];
    mean /= static_cast<double>(spec.replicate_count());
    for (Index i = 0; i < spec.replicate_count(); ++i) v[i * T + t] -= mean;
  }
  return {spec, v, SeriesKind::anomaly};
}

inline PanelSpec random_spec(std::mt19937_64& rng, Index max_d, Index max_t, Index max_n) {
  std::uniform_int_distribution<Index> d(1, max_d), t(1, max_t), n(1, max_n);
  while (true) {
    const Index D = d(rng), T = t(rng), N = n(rng);
    if (T * N >= D) return PanelSpec(T, D, N);
  }
}

/// Z written out from the model definition: row for global time u holds
/// x(u - s) in the column of (lag s, day u mod T).
inline Eigen::MatrixXd dense_design(const SeriesPanel& x) {
  const auto& spec = x.spec;
  const Index D = spec.max_lag_count(), T = spec.period_length();
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(spec.usable_rows(), spec.coefficient_count());
  for (Index u = D - 1; u < spec.observation_count(); ++u) {
    for (Index s = 0; s < D; ++s) Z(u - (D - 1), (u % T) * D + s) = x.values[u - s];
  }
  return Z;
}

/// Penalty matrices straight from their difference definitions.
inline Eigen::MatrixXd dense_horizontal(const PanelSpec& spec) {
  const Index D = spec.max_lag_count(), T = spec.period_length(), K = D * T;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(K, K);
  if (T == 1) return H;
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s < D; ++s) {
      H(t * D + s, t * D + s) -= 1.0;
      H(t * D + s, ((t + 1) % T) * D + s) += 1.0;
    }
  }
  return H;
}

inline Eigen::MatrixXd dense_vertical(const PanelSpec& spec) {
  const Index D = spec.max_lag_count(), T = spec.period_length(), K = D * T;
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(D * T, K);
  Index row = 0;
  for (Index t = 0; t < T; ++t) {
    for (Index s = 0; s + 1 < D; ++s, ++row) {
      V(row, t * D + s) = -1.0;
      V(row, t * D + s + 1) = 1.0;
    }
  }
  for (Index t = 0; t < T; ++t, ++row) V(row, t * D + D - 1) = 1.0;
  return V;
}

/// Independent solve of the penalised normal equations on the support via a
/// dense column-pivoted QR of the stacked least-squares problem.
inline Eigen::VectorXd dense_penalized_solve(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                             const Eigen::MatrixXd& H, const Eigen::MatrixXd& V,
                                             double w_h, double w_v, const Mask& support) {
  std::vector<Index> cols;
  for (std::size_t k = 0; k < support.size(); ++k)
    if (support[k]) cols.push_back(static_cast<Index>(k));
  const Index m = static_cast<Index>(cols.size());
  Eigen::MatrixXd A(Z.rows() + H.rows() + V.rows(), m);
  for (Index j = 0; j < m; ++j) {
    A.col(j) << Z.col(cols[j]), std::sqrt(w_h) * H.col(cols[j]), std::sqrt(w_v) * V.col(cols[j]);
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(A.rows());
  rhs.head(Z.rows()) = y;
  const Eigen::VectorXd reduced = A.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(Z.cols());
  for (Index j = 0; j < m; ++j) full[cols[j]] = reduced[j];
  return full;
}

}  // namespace hflm::fixture
