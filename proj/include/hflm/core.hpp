#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hflm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using IndexVector = Eigen::Matrix<Index, Eigen::Dynamic, 1>;
using Mask = std::vector<bool>;

/// General sparse matrix, row-compressed. Carries Z, D_H, D_V and the
/// normal-equation systems.
using SparseOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// ---------------------------------------------------------------------------

/// Dimensions of the periodic panel problem.
///
/// T time points per replicate, D lags (0..D-1), n replicates. The
/// coefficient grid has K = D*T cells; the flattened series has N = n*T
/// values of which N - (D-1) can be regressed on a full lag window.
class PanelSpec {
 public:
  PanelSpec(Index period_length, Index max_lag_count, Index replicate_count);

  Index period_length() const { return period_; }
  Index max_lag_count() const { return lags_; }
  Index replicate_count() const { return replicates_; }

  Index coefficient_count() const { return period_ * lags_; }
  Index observation_count() const { return period_ * replicates_; }
  Index usable_rows() const { return observation_count() - (lags_ - 1); }

  friend bool operator==(const PanelSpec&, const PanelSpec&) = default;

 private:
  Index period_;
  Index lags_;
  Index replicates_;
};

/// Flat coefficient index for lag s at day-of-year t: t*D + s.
Index flat_index(Index lag, Index day, const PanelSpec& spec);

/// Inverse of flat_index: (lag, day).
std::pair<Index, Index> lag_day(Index k, const PanelSpec& spec);

enum class SeriesKind { raw, anomaly };

/// One real-valued series over n replicates of T periods, flattened
/// replicate-major (global index u = i*T + t).
struct SeriesPanel {
  PanelSpec spec;
  Vector values;
  SeriesKind kind = SeriesKind::raw;

  double at(Index replicate, Index day) const {
    return values[replicate * spec.period_length() + day];
  }
};

/// Returns every invariant violation of the panel; empty means valid.
std::vector<std::string> validate_panel(const SeriesPanel& panel);

/// beta(s,t) on the lag x day grid, stored time-major / lag-minor.
class CoefficientSurface {
 public:
  explicit CoefficientSurface(const PanelSpec& spec);
  CoefficientSurface(const PanelSpec& spec, Vector b);

  const PanelSpec& spec() const { return spec_; }
  const Vector& coefficients() const { return b_; }
  Vector& coefficients() { return b_; }

  double operator()(Index lag, Index day) const {
    return b_[flat_index(lag, day, spec_)];
  }
  double& operator()(Index lag, Index day) {
    return b_[flat_index(lag, day, spec_)];
  }

  /// D x T view, column t holds beta(.,t).
  Eigen::Map<const Eigen::MatrixXd> grid() const {
    return {b_.data(), spec_.max_lag_count(), spec_.period_length()};
  }

 private:
  PanelSpec spec_;
  Vector b_;
};

/// delta(t): largest lag with a nonzero coefficient, or kNoLag when the
/// whole column is zero.
struct LagFunction {
  static constexpr Index kNoLag = -1;

  PanelSpec spec;
  IndexVector delta;
};

/// Largest lag with a nonzero coefficient per day, read straight off the
/// surface.
LagFunction lag_function_of(const CoefficientSurface& surface);

struct SearchBounds {
  double lower;
  double upper;
};

struct FitConfig {
  // Fixed weights skip the Bayesian optimisation steps when set.
  std::optional<double> w_h;
  std::optional<double> w_v;
  // Threshold override; knee-onset selection otherwise.
  std::optional<double> q;

  double solver_rel_tol = 1e-10;
  int hyperopt_init_count = 30;
  int hyperopt_iter_count = 35;
  SearchBounds log_wh_bounds{10.0, 20.0};
  SearchBounds log_wv_bounds{-5.0, 15.0};
  int threshold_grid_size = 50;
  std::uint64_t seed = 0;
  int threads = 1;

  /// Throws ConfigError on the first violated constraint.
  void validate() const;
};

struct FitResult {
  CoefficientSurface surface;
  LagFunction delta;
  Mask support;
  double w_h = 0.0;
  double w_v = 0.0;
  double q = 0.0;
  double r2_whole = 0.0;
  double r2_validation = 0.0;
  std::map<std::string, double> diagnostics;
};

}  // namespace hflm
