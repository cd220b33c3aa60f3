#pragma once

#include "hflm/core.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace hflm::hyperopt {

using Point = Eigen::Vector2d;

/// Log-scale box for (w_h, w_v); the optimiser works in [0,1]^2.
struct SearchSpace {
  SearchBounds log_wh{10.0, 20.0};
  SearchBounds log_wv{-5.0, 15.0};

  Point to_log(const Point& unit) const;
  Point to_unit(const Point& log_weights) const;
  /// (w_h, w_v) for a point of the unit box.
  Point to_weights(const Point& unit) const;
};

/// `count` points uniform on [0,1]^2, reproducible from the seed.
std::vector<Point> sample_initial(int count, std::uint64_t seed);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Constant-mean Gaussian process with an anisotropic squared-exponential
/// kernel. Length scales and signal variance come from a 5x5x5 grid search
/// on the marginal likelihood; the nugget is 1e-8 of the signal variance.
class SurrogateModel {
 public:
  static constexpr double kRelativeNugget = 1e-8;

  /// Duplicate points keep their largest value. Throws DomainError on fewer
  /// than two distinct points or non-finite values.
  static SurrogateModel fit(const std::vector<Point>& points, const std::vector<double>& values);

  Prediction predict(const Point& x) const;

  Point length_scales() const { return length_scales_; }
  double signal_variance() const { return signal_variance_; }
  double nugget() const { return kRelativeNugget * signal_variance_; }
  double mean() const { return mean_; }
  double best_observed() const { return best_; }
  std::size_t size() const { return points_.size(); }

 private:
  double kernel(const Point& a, const Point& b) const;

  std::vector<Point> points_;
  Point length_scales_{0.2, 0.2};
  double signal_variance_ = 1.0;
  double mean_ = 0.0;
  double best_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Vector alpha_;
};

/// Expected improvement over the best observed value, for maximisation.
double expected_improvement(const SurrogateModel& model, const Point& candidate);
double expected_improvement(double mean, double sigma, double incumbent);

struct TraceEntry {
  int iteration = 0;
  Point unit;
  double w_h = 0.0;
  double w_v = 0.0;
  double value = 0.0;  // -inf when the objective failed
  double best_so_far = 0.0;
};

struct OptimizeResult {
  double w_h = 0.0;
  double w_v = 0.0;
  Point unit;
  double best_value = 0.0;
  std::vector<TraceEntry> trace;
};

using Objective = std::function<double(double w_h, double w_v)>;

struct OptimizeOptions {
  int init_count = 30;
  int iter_count = 35;
  std::uint64_t seed = 0;
  int threads = 1;
  // Replaces the random initial design (warm start); size must equal
  // init_count.
  std::optional<std::vector<Point>> initial_design;
};

/// Bayesian optimisation of the objective over the search box:
/// init_count initial points, then iter_count points maximising EI over a
/// 64x64 lattice plus a neighbourhood of the incumbent.
OptimizeResult optimize_weights(const Objective& objective, const SearchSpace& space,
                                const OptimizeOptions& options);

}  // namespace hflm::hyperopt
