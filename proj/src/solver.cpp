#include "hflm/solver.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace hflm {

namespace {

using SymmetricMatrix = Eigen::SparseMatrix<double>;
using Cholesky = Eigen::SimplicialLLT<SymmetricMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

double relative_residual(const SymmetricMatrix& A, const Vector& b, const Vector& rhs) {
  return (rhs - A * b).norm() / rhs.norm();
}

}  // namespace

NormalSystem assemble(const GramSystem& gram, const PenaltySet& penalties, double w_h, double w_v,
                      const Mask& support) {
  const Index K = gram.spec.coefficient_count();
  if (!(w_h >= 0.0) || !(w_v >= 0.0)) throw DomainError("penalty weights must be non-negative");
  if (static_cast<Index>(support.size()) != K) throw DomainError("support length must equal D*T");

  IndexVector reduced = IndexVector::Constant(K, -1);
  std::vector<Index> columns;
  for (Index k = 0; k < K; ++k) {
    if (support[static_cast<std::size_t>(k)]) {
      reduced[k] = static_cast<Index>(columns.size());
      columns.push_back(k);
    }
  }
  const Index kept = static_cast<Index>(columns.size());
  if (kept == 0) throw DomainError("empty support: no coefficients to fit");
  if (w_h == 0.0 && w_v == 0.0 && gram.rows.size() < kept) {
    throw NumericalError("unpenalised system with " + std::to_string(gram.rows.size()) +
                         " rows and " + std::to_string(kept) + " coefficients is singular");
  }

  LowerSymmetric lower = gram.ZtZ + w_h * penalties.HtH + w_v * penalties.VtV;

  NormalSystem ns;
  ns.support = support;
  ns.columns = Eigen::Map<const IndexVector>(columns.data(), kept);
  ns.data_rows = gram.rows.size();
  ns.rhs.resize(kept);
  for (Index i = 0; i < kept; ++i) ns.rhs[i] = gram.ZtY[columns[static_cast<std::size_t>(i)]];

  if (kept != K) {
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(lower.nonZeros()));
    for (Index j = 0; j < lower.outerSize(); ++j) {
      if (reduced[j] < 0) continue;
      for (LowerSymmetric::InnerIterator it(lower, j); it; ++it) {
        if (reduced[it.row()] >= 0) entries.emplace_back(reduced[it.row()], reduced[j], it.value());
      }
    }
    lower = LowerSymmetric(kept, kept);
    lower.setFromTriplets(entries.begin(), entries.end());
  }
  ns.A = lower.selfadjointView<Eigen::Lower>();
  return ns;
}

NormalSystem assemble(const DesignSystem& design, const SparseOperator& D_H,
                      const SparseOperator& D_V, double w_h, double w_v, const Mask& support) {
  PenaltySet penalties{D_H, D_V, penalty_gram(D_H), penalty_gram(D_V)};
  return assemble(build_gram(design), penalties, w_h, w_v, support);
}

struct SpdSolver::Cache {
  std::vector<int> outer;
  std::vector<int> inner;
  std::optional<Cholesky> cholesky;

  bool same_pattern(const SymmetricMatrix& A) const {
    return cholesky && outer.size() == static_cast<std::size_t>(A.outerSize() + 1) &&
           inner.size() == static_cast<std::size_t>(A.nonZeros()) &&
           std::equal(outer.begin(), outer.end(), A.outerIndexPtr()) &&
           std::equal(inner.begin(), inner.end(), A.innerIndexPtr());
  }
};

SpdSolver::SpdSolver(SolverOptions options)
    : options_(options), cache_(std::make_unique<Cache>()) {}
SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Vector SpdSolver::solve(const NormalSystem& ns, SolveReport* report) {
  const Index K = static_cast<Index>(ns.support.size());
  Vector full = Vector::Zero(K);
  SolveReport local;
  SolveReport& rep = report ? *report : local;
  rep = {};

  const double rhs_norm = ns.rhs.norm();
  if (rhs_norm == 0.0) return full;

  SymmetricMatrix A = ns.A;
  A.makeCompressed();
  Vector b;
  if (A.rows() <= options_.direct_limit) {
    rep.direct = true;
    if (!cache_->same_pattern(A)) {
      cache_->cholesky.emplace();
      cache_->cholesky->analyzePattern(A);
      cache_->outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
      cache_->inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
    }
    auto& chol = *cache_->cholesky;
    chol.factorize(A);
    if (chol.info() != Eigen::Success) {
      cache_->cholesky.reset();
      throw NumericalError("normal matrix is not positive definite");
    }
    b = chol.solve(ns.rhs);
    rep.relative_residual = relative_residual(A, b, ns.rhs);
    for (int step = 0; step < options_.max_refinement_steps &&
                       rep.relative_residual > options_.rel_tol;
         ++step) {
      Vector candidate = b + chol.solve(ns.rhs - A * b);
      const double res = relative_residual(A, candidate, ns.rhs);
      ++rep.iterations;
      if (!(res < rep.relative_residual)) break;
      b = std::move(candidate);
      rep.relative_residual = res;
    }
  } else {
    rep.direct = false;
    Eigen::ConjugateGradient<SymmetricMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>>
        cg;
    cg.setTolerance(options_.rel_tol);
    cg.setMaxIterations(options_.max_cg_iterations);
    cg.compute(A);
    b = cg.solve(ns.rhs);
    rep.iterations = cg.iterations();
    rep.relative_residual = relative_residual(A, b, ns.rhs);
  }

  if (!b.allFinite()) throw NumericalError("solver produced non-finite coefficients");
  if (!(rep.relative_residual <= options_.rel_tol)) {
    throw SolverError("solver did not reach relative residual " + std::to_string(options_.rel_tol) +
                          " (got " + std::to_string(rep.relative_residual) + ")",
                      rep.relative_residual);
  }
  for (Index i = 0; i < ns.columns.size(); ++i) full[ns.columns[i]] = b[i];
  return full;
}

Vector solve(const NormalSystem& ns, double rel_tol) {
  SolverOptions opts;
  opts.rel_tol = rel_tol;
  SpdSolver solver(opts);
  return solver.solve(ns);
}

double penalized_objective(const DesignSystem& design, const PenaltySet& penalties, double w_h,
                           double w_v, const Vector& b, RowRange rows) {
  const Vector resid = design.Y.segment(rows.begin, rows.size()) - predict(design, b, rows);
  return resid.squaredNorm() + w_h * (penalties.D_H * b).squaredNorm() +
         w_v * (penalties.D_V * b).squaredNorm();
}

CoefficientSurface fit_surface(const DesignSystem& design, const SparseOperator& D_H,
                               const SparseOperator& D_V, double w_h, double w_v,
                               const Mask& support, double rel_tol) {
  return CoefficientSurface(design.spec, solve(assemble(design, D_H, D_V, w_h, w_v, support), rel_tol));
}

CoefficientSurface fit_surface(const GramSystem& gram, const PenaltySet& penalties, double w_h,
                               double w_v, const Mask& support, SpdSolver& solver,
                               SolveReport* report) {
  return CoefficientSurface(gram.spec,
                            solver.solve(assemble(gram, penalties, w_h, w_v, support), report));
}

}  // namespace hflm
