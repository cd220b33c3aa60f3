#include "hflm/hyperopt.hpp"

#include "hflm/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace hflm::hyperopt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kLattice = 64;

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double lerp(const SearchBounds& b, double u) { return b.lower + u * (b.upper - b.lower); }

}  // namespace

Point SearchSpace::to_log(const Point& unit) const {
  return {lerp(log_wh, unit.x()), lerp(log_wv, unit.y())};
}

Point SearchSpace::to_unit(const Point& lw) const {
  return {(lw.x() - log_wh.lower) / (log_wh.upper - log_wh.lower),
          (lw.y() - log_wv.lower) / (log_wv.upper - log_wv.lower)};
}

Point SearchSpace::to_weights(const Point& unit) const {
  return to_log(unit.cwiseMax(0.0).cwiseMin(1.0)).array().exp().matrix();
}

std::vector<Point> sample_initial(int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("initial design needs at least one point");
  std::mt19937_64 rng(seed);
  std::vector<Point> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double a = unit_uniform(rng);
    const double b = unit_uniform(rng);
    points.emplace_back(a, b);
  }
  return points;
}

double SurrogateModel::kernel(const Point& a, const Point& b) const {
  const Eigen::Array2d z = (a - b).array() / length_scales_.array();
  return signal_variance_ * std::exp(-0.5 * z.square().sum());
}

SurrogateModel SurrogateModel::fit(const std::vector<Point>& points,
                                   const std::vector<double>& values) {
  if (points.size() != values.size()) throw DomainError("surrogate: points/values length mismatch");

  SurrogateModel model;
  std::vector<double> kept_values;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(values[i])) throw DomainError("surrogate: non-finite objective value");
    auto dup = std::find_if(model.points_.begin(), model.points_.end(), [&](const Point& p) {
      return (p - points[i]).cwiseAbs().maxCoeff() < 1e-12;
    });
    if (dup != model.points_.end()) {
      auto& v = kept_values[static_cast<std::size_t>(dup - model.points_.begin())];
      v = std::max(v, values[i]);
    } else {
      model.points_.push_back(points[i]);
      kept_values.push_back(values[i]);
    }
  }
  const auto n = static_cast<Index>(model.points_.size());
  if (n < 2) throw DomainError("surrogate: need at least two distinct points");

  const Vector y = Eigen::Map<const Vector>(kept_values.data(), n);
  model.best_ = y.maxCoeff();
  const double spread = (y.array() - y.mean()).square().mean();
  const double base_variance = spread > 0.0 ? spread : 1.0;

  constexpr std::array<double, 5> kScales{0.05, 0.1, 0.2, 0.4, 0.8};
  constexpr std::array<double, 5> kVariances{0.25, 0.5, 1.0, 2.0, 4.0};
  const Vector ones = Vector::Ones(n);

  double best_loglik = kNegInf;
  for (double l1 : kScales) {
    for (double l2 : kScales) {
      for (double v : kVariances) {
        SurrogateModel trial = model;
        trial.length_scales_ = {l1, l2};
        trial.signal_variance_ = v * base_variance;
        Eigen::MatrixXd K(n, n);
        for (Index i = 0; i < n; ++i) {
          for (Index j = 0; j <= i; ++j) {
            K(i, j) = K(j, i) = trial.kernel(trial.points_[static_cast<std::size_t>(i)],
                                             trial.points_[static_cast<std::size_t>(j)]);
          }
        }
        K.diagonal().array() += trial.nugget();
        trial.chol_.compute(K);
        if (trial.chol_.info() != Eigen::Success) continue;

        const Vector Kinv_one = trial.chol_.solve(ones);
        trial.mean_ = Kinv_one.dot(y) / Kinv_one.dot(ones);
        const Vector resid = y.array() - trial.mean_;
        trial.alpha_ = trial.chol_.solve(resid);
        const Eigen::MatrixXd L = trial.chol_.matrixL();
        const double loglik =
            -0.5 * resid.dot(trial.alpha_) - L.diagonal().array().log().sum();
        if (std::isfinite(loglik) && loglik > best_loglik) {
          best_loglik = loglik;
          model = std::move(trial);
        }
      }
    }
  }
  if (!(best_loglik > kNegInf)) throw NumericalError("surrogate: kernel matrix not positive definite");
  return model;
}

Prediction SurrogateModel::predict(const Point& x) const {
  const auto n = static_cast<Index>(points_.size());
  Vector k(n);
  for (Index i = 0; i < n; ++i) k[i] = kernel(x, points_[static_cast<std::size_t>(i)]);
  Prediction p;
  p.mean = mean_ + k.dot(alpha_);
  const Vector v = chol_.matrixL().solve(k);
  p.variance = std::max(0.0, signal_variance_ - v.squaredNorm());
  return p;
}

double expected_improvement(double mean, double sigma, double incumbent) {
  if (!(sigma > 0.0)) return 0.0;
  const double gain = mean - incumbent;
  const double z = gain / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return std::max(0.0, gain * cdf + sigma * pdf);
}

double expected_improvement(const SurrogateModel& model, const Point& candidate) {
  const auto p = model.predict(candidate);
  // At or below the nugget the posterior is pinned by an observation.
  const double sigma = p.variance > model.nugget() ? std::sqrt(p.variance) : 0.0;
  return expected_improvement(p.mean, sigma, model.best_observed());
}

namespace {

std::vector<Point> candidate_set(const Point& incumbent) {
  std::vector<Point> out;
  out.reserve(kLattice * kLattice + 24);
  for (int i = 0; i < kLattice; ++i) {
    for (int j = 0; j < kLattice; ++j) {
      out.emplace_back((i + 0.5) / kLattice, (j + 0.5) / kLattice);
    }
  }
  for (double r : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        out.push_back((incumbent + r * Point(dx, dy)).cwiseMax(0.0).cwiseMin(1.0));
      }
    }
  }
  return out;
}

}  // namespace

OptimizeResult optimize_weights(const Objective& objective, const SearchSpace& space,
                                const OptimizeOptions& options) {
  if (options.init_count < 1 || options.iter_count < 0) {
    throw DomainError("hyperopt: init_count must be >= 1 and iter_count >= 0");
  }
  std::mt19937_64 rng(options.seed);
  std::vector<Point> design;
  if (options.initial_design) {
    design = *options.initial_design;
    if (static_cast<int>(design.size()) != options.init_count) {
      throw DomainError("hyperopt: warm-start design size differs from init_count");
    }
  } else {
    design = sample_initial(options.init_count, options.seed);
  }
  // The EI phase draws from a stream independent of the initial design.
  rng.seed(options.seed ^ 0x9e3779b97f4a7c15ULL);

  auto evaluate = [&](const Point& u) {
    const Point w = space.to_weights(u);
    try {
      const double v = objective(w.x(), w.y());
      return std::isfinite(v) ? v : kNegInf;
    } catch (const std::exception&) {
      return kNegInf;
    }
  };

  OptimizeResult result;
  std::vector<Point> points(design.size());
  std::vector<double> values(design.size());
  parallel_for(design.size(), options.threads, [&](std::size_t i, std::size_t) {
    points[i] = design[i].cwiseMax(0.0).cwiseMin(1.0);
    values[i] = evaluate(points[i]);
  });

  double best = kNegInf;
  std::size_t best_index = 0;
  auto record = [&](const Point& u, double value) {
    const std::size_t idx = result.trace.size();
    if (value > best) {
      best = value;
      best_index = idx;
    }
    const Point w = space.to_weights(u);
    result.trace.push_back({static_cast<int>(idx), u, w.x(), w.y(), value, best});
  };
  for (std::size_t i = 0; i < points.size(); ++i) record(points[i], values[i]);

  for (int iter = 0; iter < options.iter_count; ++iter) {
    std::vector<Point> finite_points;
    std::vector<double> finite_values;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (std::isfinite(values[i])) {
        finite_points.push_back(points[i]);
        finite_values.push_back(values[i]);
      }
    }

    Point next;
    std::optional<SurrogateModel> model;
    try {
      if (finite_points.size() >= 2) model = SurrogateModel::fit(finite_points, finite_values);
    } catch (const DomainError&) {
      model.reset();
    }
    if (model) {
      const auto candidates = candidate_set(result.trace[best_index].unit);
      double best_ei = -1.0;
      for (const auto& c : candidates) {
        const double ei = expected_improvement(*model, c);
        if (ei > best_ei) {
          best_ei = ei;
          next = c;
        }
      }
    } else {
      const double a = unit_uniform(rng);
      const double b = unit_uniform(rng);
      next = Point(a, b);
    }
    const double value = evaluate(next);
    points.push_back(next);
    values.push_back(value);
    record(next, value);
  }

  if (!std::isfinite(best)) throw NumericalError("hyperopt: objective failed at every point");
  const auto& winner = result.trace[best_index];
  result.unit = winner.unit;
  result.w_h = winner.w_h;
  result.w_v = winner.w_v;
  result.best_value = best;
  return result;
}

}  // namespace hflm::hyperopt
