// Acceptance run: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include "hflm/hyperopt.hpp"
#include "hflm/ingest.hpp"
#include "hflm/metrics.hpp"
#include "hflm/pipeline.hpp"
#include "hflm/simulate.hpp"
#include "hflm/solver.hpp"
#include "hflm/sparsity.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace hflm;

namespace {

struct Outcome {
  enum Status { pass, fail, skip } status = pass;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) failures_ << (failures_.tellp() > 0 ? "; " : "") << what;
  }
  Outcome outcome(const std::string& detail) const {
    const std::string f = failures_.str();
    if (f.empty()) return {Outcome::pass, detail};
    return {Outcome::fail, detail.empty() ? f : detail + "; " + f};
  }

 private:
  std::ostringstream failures_;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

int failures = 0;

void criterion(int id, const std::string& name, double limit_seconds,
               const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {Outcome::fail, std::string("exception: ") + e.what()};
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.status == Outcome::pass && limit_seconds > 0 && seconds > limit_seconds) {
    o = {Outcome::fail, o.detail + "; runtime " + fmt(seconds, 1) + " s over " +
                            fmt(limit_seconds, 0) + " s"};
  }
  const char* label = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
  if (o.status == Outcome::fail) ++failures;
  std::cout << label << " criterion " << id << " " << name << " (" << fmt(seconds, 2) << " s): "
            << o.detail << std::endl;
}

Outcome penalty_fixtures() {
  Eigen::MatrixXd H(6, 6), V(6, 6);
  H << -1, 0, 1, 0, 0, 0,  0, -1, 0, 1, 0, 0,  0, 0, -1, 0, 1, 0,
        0, 0, 0, -1, 0, 1,  1, 0, 0, 0, -1, 0,  0, 1, 0, 0, 0, -1;
  V << -1, 1, 0, 0, 0, 0,  0, 0, -1, 1, 0, 0,  0, 0, 0, 0, -1, 1,
        0, 1, 0, 0, 0, 0,   0, 0, 0, 1, 0, 0,   0, 0, 0, 0, 0, 1;
  const PanelSpec spec(3, 2, 1);
  Check c;
  c.require(Eigen::MatrixXd(build_horizontal_penalty(spec)) == H, "D_H differs");
  c.require(Eigen::MatrixXd(build_vertical_penalty(spec)) == V, "D_V differs");
  return c.outcome("D=2, T=3 horizontal and vertical operators exact");
}

Outcome design_fixture() {
  const PanelSpec spec(3, 2, 2);
  Vector x(6), y(6);
  x << 11, 12, 13, 21, 22, 23;  // x_i(t) = 10 i + t, 1-based t
  y << 111, 112, 113, 121, 122, 123;
  const auto sys = build_design({spec, x, SeriesKind::anomaly}, {spec, y, SeriesKind::anomaly});
  const Eigen::MatrixXd Z(sys.Z);
  Check c;
  c.require(sys.rows() == 5, "row count " + std::to_string(sys.rows()));
  Vector expected_y(5);
  expected_y << 112, 113, 121, 122, 123;
  c.require(sys.Y == expected_y, "response order");
  // Row for y_2(1): lag 0 is x_2(1), lag 1 reaches back to x_1(3).
  c.require(Z(2, flat_index(0, 0, spec)) == 21 && Z(2, flat_index(1, 0, spec)) == 13,
            "cross-replicate lag entry");
  c.require(Z == fixture::dense_design({spec, x, SeriesKind::anomaly}), "Z differs from oracle");
  return c.outcome("5 rows [y1(2), y1(3), y2(1), y2(2), y2(3)], x1(3) in the y2(1) row");
}

Outcome solver_oracle() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> logw(-4.0, 4.0);
  std::bernoulli_distribution full(0.5), keep(0.7);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const PanelSpec spec = fixture::random_spec(rng, 4, 10, 3);
    const auto x = fixture::random_anomaly(spec, rng);
    const auto y = fixture::random_anomaly(spec, rng);
    const auto sys = build_design(x, y);
    const auto pen = build_penalties(spec);
    const double w_h = std::exp(logw(rng)), w_v = std::exp(logw(rng));
    Mask support = full_support(spec);
    if (!full(rng)) {
      for (auto&& s : support) s = keep(rng);
      support[0] = true;
    }
    const Vector b = solve(assemble(sys, pen.D_H, pen.D_V, w_h, w_v, support));
    const Vector ref = fixture::dense_penalized_solve(fixture::dense_design(x), sys.Y,
                                                      fixture::dense_horizontal(spec),
                                                      fixture::dense_vertical(spec), w_h, w_v, support);
    worst = std::max(worst, (b - ref).norm() / std::max(ref.norm(), 1e-300));
  }
  Check c;
  c.require(worst <= 1e-8, "relative error " + std::to_string(worst));
  return c.outcome("50 instances, worst relative error " + fmt(worst * 1e12, 3) + "e-12");
}

Outcome noise_calibration() {
  using namespace simulate;
  const PanelSpec spec(365, 20, 30);
  const auto x = ingest::seasonal_demean(synthetic_rainfall(spec, 7)).first;
  const auto truth = synth_truth(spec, SmoothBump{});
  const Vector y_true = true_response(x, truth);
  Check c;
  c.require(spec.usable_rows() >= 10000, "too few rows");
  std::ostringstream detail;
  detail << "rows " << spec.usable_rows();
  for (double target : {0.4, 0.8}) {
    const auto sim = simulate_response(x, truth, calibrate_noise(y_true, target), 8);
    const double got = r2(sim.y_rows, sim.y_true_rows);
    detail << ", R2 at " << target << " = " << fmt(got);
    c.require(std::abs(got - target) <= 0.02, "target " + fmt(target, 1) + " got " + fmt(got));
  }
  const double ratio = calibrate_noise(y_true, 0.4) / calibrate_noise(y_true, 0.8);
  c.require(std::abs(ratio - 6.0) <= 1e-12, "ratio " + fmt(ratio, 12));
  for (auto [a, b] : {std::pair{0.244, 0.041}, std::pair{0.100, 0.017}}) {
    c.require(std::abs(a / b - 6.0) <= 0.05 * 6.0, "printed pair ratio " + fmt(a / b));
  }
  detail << ", ratio " << fmt(ratio, 12) << ", printed pairs " << fmt(0.244 / 0.041, 3) << " and "
         << fmt(0.100 / 0.017, 3);
  return c.outcome(detail.str());
}

Outcome desk_study() {
  using namespace simulate;
  auto config = desk_fit_config();
  config.hyperopt_init_count = 30;
  config.hyperopt_iter_count = 35;
  config.seed = 2024;
  config.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  Check c;
  std::ostringstream detail;
  const auto high = run_study(desk_scenario(0.8, 20, 2024), config);
  detail << "target 0.8: beta_r2 " << fmt(high.beta_r2.mean) << " (sd " << fmt(high.beta_r2.sd)
         << "), delta_corr " << fmt(high.delta_corr.mean) << ", delta_bias "
         << fmt(high.delta_bias.mean, 2) << ", failed " << high.failed << ", corr undefined "
         << high.delta_corr_undefined;
  c.require(high.failed == 0, "failed replicates at 0.8");
  c.require(high.beta_r2.mean >= 0.90, "mean beta_r2 " + fmt(high.beta_r2.mean) + " < 0.90");
  c.require(high.delta_corr.mean >= 0.80, "mean delta_corr " + fmt(high.delta_corr.mean) + " < 0.80");
  c.require(std::abs(high.delta_bias.mean) <= 5.0, "|mean delta_bias| > 5");
  const auto low = run_study(desk_scenario(0.4, 20, 2024), config);
  detail << "; target 0.4: beta_r2 " << fmt(low.beta_r2.mean) << " (sd " << fmt(low.beta_r2.sd)
         << "), delta_corr " << fmt(low.delta_corr.mean) << ", delta_bias "
         << fmt(low.delta_bias.mean, 2);
  c.require(low.failed == 0, "failed replicates at 0.4");
  c.require(low.beta_r2.mean >= 0.80, "mean beta_r2 at 0.4 " + fmt(low.beta_r2.mean) + " < 0.80");
  return c.outcome(detail.str());
}

Outcome property_suites() {
  constexpr int kCases = 1000;
  std::mt19937_64 rng(99);
  Check c;
  std::normal_distribution<double> normal;

  for (int i = 0; i < kCases; ++i) {  // flat index bijection
    const PanelSpec spec = fixture::random_spec(rng, 20, 40, 2);
    for (Index k = 0; k < spec.coefficient_count(); ++k) {
      const auto [s, t] = lag_day(k, spec);
      if (flat_index(s, t, spec) != k || k != t * spec.max_lag_count() + s) {
        c.require(false, "flat index bijection");
        i = kCases;
        break;
      }
    }
  }

  bool nesting = true, monotone = true;
  for (int i = 0; i < kCases; ++i) {  // group norms and thresholds
    const PanelSpec spec = fixture::random_spec(rng, 10, 12, 1);
    CoefficientSurface s(spec);
    for (Index k = 0; k < spec.coefficient_count(); ++k) s.coefficients()[k] = normal(rng);
    const auto g = group_norms(s);
    for (Index t = 0; t < spec.period_length(); ++t) {
      double tail = 0.0;
      for (Index l = spec.max_lag_count() - 1; l >= 0; --l) {
        tail += s(l, t) * s(l, t);
        nesting &= std::abs(g.G(l, t) - tail) <= 1e-12 * (1 + tail);
        if (l > 0) nesting &= g.G(l - 1, t) >= g.G(l, t);
      }
    }
    std::uniform_real_distribution<double> uq(0.0, g.G.maxCoeff() * 1.2);
    double q1 = uq(rng), q2 = uq(rng);
    if (q1 > q2) std::swap(q1, q2);
    const auto d1 = extract_delta(apply_threshold(g, q1), spec);
    const auto d2 = extract_delta(apply_threshold(g, q2), spec);
    monotone &= (d1.delta.array() >= d2.delta.array()).all();
  }
  c.require(nesting, "group norm nesting");
  c.require(monotone, "delta monotone in q");

  bool demean = true;
  for (int i = 0; i < kCases; ++i) {
    const PanelSpec spec = fixture::random_spec(rng, 1, 30, 8);
    Vector v(spec.observation_count());
    for (Index u = 0; u < v.size(); ++u) v[u] = 5.0 + 3.0 * normal(rng);
    const auto once = ingest::seasonal_demean({spec, v, SeriesKind::raw}).first;
    const auto twice = ingest::seasonal_demean(once).first;
    demean &= validate_panel(once).empty();
    demean &= (twice.values - once.values).cwiseAbs().maxCoeff() <= 1e-12;
  }
  c.require(demean, "seasonal demean idempotence / zero mean");

  bool ei = true;
  for (int i = 0; i < kCases; ++i) {
    std::uniform_real_distribution<double> u(-3, 3), ls(-4, 1);
    const double mu = u(rng), sigma = std::exp(ls(rng)), f = u(rng);
    const double z = (mu - f) / sigma;
    const double expected = (mu - f) * 0.5 * std::erfc(-z / std::sqrt(2.0)) +
                            sigma * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    ei &= std::abs(hyperopt::expected_improvement(mu, sigma, f) - std::max(0.0, expected)) <=
          1e-12 * (1.0 + std::abs(expected));
  }
  ei &= std::abs(hyperopt::expected_improvement(1.0, 2.0, 1.0) - 2.0 * 0.3989422804014327) < 1e-12;
  c.require(ei, "EI closed form");

  bool determinism = true;
  for (int i = 0; i < kCases; ++i) {
    const auto seed = rng();
    determinism &= hyperopt::sample_initial(30, seed) == hyperopt::sample_initial(30, seed);
  }
  const hyperopt::Objective objective = [](double w_h, double w_v) {
    return -std::pow(std::log(w_h) - 13.0, 2) - 0.5 * std::pow(std::log(w_v) - 2.0, 2);
  };
  for (int i = 0; i < 3; ++i) {
    const hyperopt::OptimizeOptions opts{30, 35, static_cast<std::uint64_t>(i), 1, std::nullopt};
    const auto a = hyperopt::optimize_weights(objective, {}, opts);
    const auto b = hyperopt::optimize_weights(objective, {}, opts);
    determinism &= a.trace.size() == 65 && b.trace.size() == 65;
    for (std::size_t k = 0; k < a.trace.size() && k < b.trace.size(); ++k) {
      determinism &= a.trace[k].unit == b.trace[k].unit && a.trace[k].value == b.trace[k].value;
    }
  }
  c.require(determinism, "hyperopt determinism / 65-entry trace");
  return c.outcome(std::to_string(kCases) +
                   " cases each: flat index, nesting, q monotonicity, demean, EI, initial design");
}

Outcome knee_detection() {
  std::mt19937_64 rng(7);
  int exact = 0;
  std::ostringstream misses;
  for (int trial = 0; trial < 20; ++trial) {
    // Flat, steep fall onto a shelf, steep fall onto a floor: knees at the
    // start of each fall.
    const Index n = std::uniform_int_distribution<Index>(40, 80)(rng);
    const Index k1 = std::uniform_int_distribution<Index>(n / 10, n / 4)(rng);
    const Index e1 = k1 + std::uniform_int_distribution<Index>(2, 6)(rng);
    const Index k2 = std::uniform_int_distribution<Index>(e1 + n / 5, n - 12)(rng);
    const Index e2 = k2 + std::uniform_int_distribution<Index>(2, 6)(rng);
    const double top = std::uniform_real_distribution<double>(0.5, 1.0)(rng);
    const double shelf = top * std::uniform_real_distribution<double>(0.4, 0.7)(rng);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
      if (i <= k1) v[i] = top;
      else if (i <= e1) v[i] = top + (shelf - top) * double(i - k1) / double(e1 - k1);
      else if (i <= k2) v[i] = shelf;
      else if (i <= e2) v[i] = shelf * (1.0 - double(i - k2) / double(e2 - k2));
      else v[i] = 0.0;
    }
    const auto r = knee_onset(v);
    if (r.index == k1 && !r.fallback && r.knee_count == 2) {
      ++exact;
    } else {
      misses << " trial " << trial << " got " << r.index << " of " << r.knee_count << " knees, want " << k1;
    }
  }
  Check c;
  c.require(exact == 20, "missed:" + misses.str());
  return c.outcome(std::to_string(exact) + "/20 first knees exact");
}

Outcome noiseless_recovery() {
  using namespace simulate;
  const PanelSpec spec(24, 8, 40);
  const auto x = ingest::seasonal_demean(synthetic_rainfall(spec, 5)).first;
  // Equal coefficients on lags 0..delta(t): each true lag is visible in R^2.
  const auto lags = bump_lags(spec, SmoothBump{6.0, 2.0, 6.0, 0.1});
  CoefficientSurface truth(spec);
  for (Index t = 0; t < spec.period_length(); ++t)
    for (Index s = 0; s <= lags[t]; ++s) truth(s, t) = 0.1;
  const auto sim = simulate_response(x, truth, 0.0, 1);
  FitConfig config;
  config.w_h = 1e-8;
  config.w_v = 1e-8;
  const auto report = evaluate_holdout(x, ingest::seasonal_demean(sim.y).first, config);
  const double b = beta_r2(truth, report.fit.surface);
  Check c;
  c.require(b >= 0.999, "beta_r2 " + fmt(b, 6));
  c.require(report.r2_test && *report.r2_test >= 0.999, "test R2");
  return c.outcome("beta_r2 " + fmt(b, 6) + ", test R2 " + fmt(report.r2_test.value_or(NAN), 6) +
                   ", usable rows " + std::to_string(spec.usable_rows()) + " > K " +
                   std::to_string(spec.coefficient_count()));
}

Outcome full_scale() {
  const char* x_path = std::getenv("HFLM_FULL_SCALE_CSV");
  if (!x_path) {
    return {Outcome::skip, "set HFLM_FULL_SCALE_CSV to a 40-year daily rainfall/flow CSV to run"};
  }
  auto records = ingest::remove_leap_days(ingest::load_csv(x_path));
  const Index years = static_cast<Index>(records.size()) / 365;
  const PanelSpec spec(365, 150, years);
  const Vector rain = ingest::split_rain_snow(records);
  const Vector flow = ingest::log_transform_flow(ingest::flow_series(records));
  const auto x = ingest::seasonal_demean({spec, rain, SeriesKind::raw}).first;
  const auto y = ingest::seasonal_demean({spec, flow, SeriesKind::raw}).first;
  FitConfig config;
  config.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto start = std::chrono::steady_clock::now();
  const auto report = run_algorithm1(x, y, config);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  Check c;
  c.require(report.fit.surface.coefficients().size() == 54750 || years != 40, "surface size");
  c.require(minutes <= 10.0, "fit took " + fmt(minutes, 1) + " min");
  return c.outcome(std::to_string(years) + " years, " +
                   std::to_string(report.fit.surface.coefficients().size()) + " cells, " +
                   fmt(minutes, 2) + " min");
}

}  // namespace

int main() {
  criterion(1, "penalty fixtures", 1.0, penalty_fixtures);
  criterion(2, "design fixture", 1.0, design_fixture);
  criterion(3, "solver oracle", 10.0, solver_oracle);
  criterion(4, "noise calibration", 0.0, noise_calibration);
  criterion(5, "desk-scale study", 15.0 * 60.0, desk_study);
  criterion(6, "property suites", 60.0, property_suites);
  criterion(7, "knee detection", 1.0, knee_detection);
  criterion(8, "noiseless recovery", 30.0, noiseless_recovery);
  criterion(9, "full-scale mode", 0.0, full_scale);
  std::cout << (failures == 0 ? "ALL CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAIL")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
