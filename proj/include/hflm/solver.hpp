#pragma once

#include "hflm/core.hpp"
#include "hflm/operators.hpp"

#include <Eigen/SparseCholesky>

#include <memory>

namespace hflm {

/// Stationarity system of the doubly penalised least-squares objective,
/// restricted to the coefficients in `support`:
///
///   (Z'Z + w_h D_H'D_H + w_v D_V'D_V) b = Z'Y.
///
/// A is stored in full but built by mirroring its lower triangle, so it is
/// exactly symmetric.
struct NormalSystem {
  Eigen::SparseMatrix<double> A;
  Vector rhs;
  Mask support;
  IndexVector columns;  // full index of each reduced coefficient
  Index data_rows = 0;
};

NormalSystem assemble(const GramSystem& gram, const PenaltySet& penalties, double w_h, double w_v,
                      const Mask& support);

NormalSystem assemble(const DesignSystem& design, const SparseOperator& D_H,
                      const SparseOperator& D_V, double w_h, double w_v, const Mask& support);

struct SolverOptions {
  double rel_tol = 1e-10;
  // Systems above this size go to preconditioned CG instead of Cholesky.
  Index direct_limit = 100000;
  Index max_cg_iterations = 20000;
  int max_refinement_steps = 4;
};

struct SolveReport {
  double relative_residual = 0.0;
  Index iterations = 0;
  bool direct = true;
};

/// Solves NormalSystem instances, reusing the symbolic Cholesky analysis
/// while the sparsity pattern is unchanged. Not thread-safe; give each
/// worker its own instance.
class SpdSolver {
 public:
  explicit SpdSolver(SolverOptions options = {});
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  /// Full-length coefficient vector (zeros outside the support).
  Vector solve(const NormalSystem& ns, SolveReport* report = nullptr);

  const SolverOptions& options() const { return options_; }

 private:
  struct Cache;
  SolverOptions options_;
  std::unique_ptr<Cache> cache_;
};

Vector solve(const NormalSystem& ns, double rel_tol = 1e-10);

/// ||Y - Z b||^2 + w_h ||D_H b||^2 + w_v ||D_V b||^2 over the given rows.
double penalized_objective(const DesignSystem& design, const PenaltySet& penalties, double w_h,
                           double w_v, const Vector& b, RowRange rows);

CoefficientSurface fit_surface(const DesignSystem& design, const SparseOperator& D_H,
                               const SparseOperator& D_V, double w_h, double w_v,
                               const Mask& support, double rel_tol = 1e-10);

CoefficientSurface fit_surface(const GramSystem& gram, const PenaltySet& penalties, double w_h,
                               double w_v, const Mask& support, SpdSolver& solver,
                               SolveReport* report = nullptr);

inline Mask full_support(const PanelSpec& spec) {
  return Mask(static_cast<std::size_t>(spec.coefficient_count()), true);
}

}  // namespace hflm
