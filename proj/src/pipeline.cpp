#include "hflm/pipeline.hpp"

#include "hflm/ingest.hpp"
#include "hflm/metrics.hpp"
#include "hflm/parallel.hpp"
#include "hflm/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>

namespace hflm {

namespace {

/// Per-thread SpdSolver instances, so concurrent objective evaluations keep
/// their own symbolic factorisations.
class SolverPool {
 public:
  explicit SolverPool(SolverOptions options) : options_(options) {}

  class Lease {
   public:
    Lease(SolverPool& pool, std::unique_ptr<SpdSolver> solver)
        : pool_(pool), solver_(std::move(solver)) {}
    ~Lease() { pool_.release(std::move(solver_)); }
    Lease(const Lease&) = delete;
    Lease& operator=(const Lease&) = delete;
    SpdSolver& operator*() { return *solver_; }

   private:
    SolverPool& pool_;
    std::unique_ptr<SpdSolver> solver_;
  };

  Lease acquire() {
    std::lock_guard lock(mutex_);
    if (free_.empty()) return Lease(*this, std::make_unique<SpdSolver>(options_));
    auto solver = std::move(free_.back());
    free_.pop_back();
    return Lease(*this, std::move(solver));
  }

 private:
  void release(std::unique_ptr<SpdSolver> solver) {
    std::lock_guard lock(mutex_);
    free_.push_back(std::move(solver));
  }

  SolverOptions options_;
  std::mutex mutex_;
  std::vector<std::unique_ptr<SpdSolver>> free_;
};

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& sink) : sink_(sink) {}
  void mark(std::string stage) {
    const auto now = std::chrono::steady_clock::now();
    sink_.push_back({std::move(stage), std::chrono::duration<double>(now - last_).count()});
    last_ = now;
  }

 private:
  std::vector<StageTiming>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

Index split_point(Index rows, double fraction) {
  return static_cast<Index>(std::llround(fraction * static_cast<double>(rows)));
}

Vector rows_of(const Vector& v, RowRange r) { return v.segment(r.begin, r.size()); }

}  // namespace

PipelineReport run_pipeline(const SeriesPanel& x, const SeriesPanel& y, const FitConfig& config,
                            SplitMode mode) {
  config.validate();
  PipelineReport report(FitResult{CoefficientSurface(x.spec), LagFunction{x.spec, {}}, {}, 0.0, 0.0, 0.0, 0.0, 0.0, {}});
  StageClock clock(report.timings);

  const auto design = build_design(x, y);
  const auto penalties = build_penalties(x.spec);
  const auto& spec = x.spec;
  const Index R = design.rows();

  if (mode == SplitMode::train80_val20) {
    const Index cut = split_point(R, 0.8);
    report.train_rows = {0, cut};
    report.validation_rows = {cut, R};
    report.fit_rows = {0, R};
  } else {
    const Index cut1 = split_point(R, 0.6);
    const Index cut2 = split_point(R, 0.8);
    report.train_rows = {0, cut1};
    report.validation_rows = {cut1, cut2};
    report.fit_rows = {0, cut2};
    report.test_rows = RowRange{cut2, R};
    if (report.test_rows->size() < spec.max_lag_count()) {
      throw DataError("test block has " + std::to_string(report.test_rows->size()) +
                      " rows, fewer than D = " + std::to_string(spec.max_lag_count()));
    }
  }
  if (report.train_rows.size() < 2 || report.validation_rows.size() < 2) {
    throw DataError("too few design rows (" + std::to_string(R) + ") to split");
  }

  const auto gram_train = build_gram(design, report.train_rows);
  const auto gram_fit = build_gram(design, report.fit_rows);
  const Vector y_val = rows_of(design.Y, report.validation_rows);
  const Vector y_fit = rows_of(design.Y, report.fit_rows);
  clock.mark("assemble");

  SolverOptions solver_options;
  solver_options.rel_tol = config.solver_rel_tol;
  SolverPool pool(solver_options);

  auto validation_r2 = [&](double w_h, double w_v, const Mask& support) {
    auto solver = pool.acquire();
    const auto surface = fit_surface(gram_train, penalties, w_h, w_v, support, *solver);
    return r2(y_val, predict(design, surface.coefficients(), report.validation_rows));
  };

  const hyperopt::SearchSpace space{config.log_wh_bounds, config.log_wv_bounds};
  const bool fixed = config.w_h.has_value();
  const Mask full = full_support(spec);

  // 1. weights for the smooth fit
  double w_h = 0.0, w_v = 0.0;
  std::vector<hyperopt::Point> initial_design;
  if (fixed) {
    w_h = *config.w_h;
    w_v = *config.w_v;
  } else {
    hyperopt::OptimizeOptions opts{config.hyperopt_init_count, config.hyperopt_iter_count,
                                   config.seed, config.threads, std::nullopt};
    auto best = hyperopt::optimize_weights(
        [&](double a, double b) { return validation_r2(a, b, full); }, space, opts);
    w_h = best.w_h;
    w_v = best.w_v;
    report.smooth_trace = std::move(best.trace);
    for (int i = 0; i < config.hyperopt_init_count; ++i) {
      initial_design.push_back(report.smooth_trace[static_cast<std::size_t>(i)].unit);
    }
  }
  report.w_h_smooth = w_h;
  report.w_v_smooth = w_v;
  clock.mark("optimize_smooth_weights");

  // 2. smooth surface on the training rows
  CoefficientSurface smooth(spec);
  {
    auto solver = pool.acquire();
    smooth = fit_surface(gram_train, penalties, w_h, w_v, full, *solver);
  }
  clock.mark("smooth_fit");

  // 3-4. group norms, threshold curve, q
  const auto norms = group_norms(smooth);
  double q = config.q.value_or(0.0);
  try {
    report.curve = threshold_curve(design, gram_fit, penalties, w_h, w_v, smooth,
                                   config.threshold_grid_size, config.solver_rel_tol,
                                   config.threads);
    if (!config.q) {
      report.knee = knee_onset(report.curve);
      q = report.knee->q;
      if (report.knee->fallback) report.flags.emplace_back("knee_curvature_fallback");
    }
  } catch (const DomainError& e) {
    report.flags.push_back(std::string("threshold_selection_failed: ") + e.what());
  }
  const Mask support = apply_threshold(norms, q);
  const auto support_size = std::count(support.begin(), support.end(), true);
  clock.mark("threshold");

  auto& fit = report.fit;
  fit.support = support;
  fit.q = q;
  fit.delta = extract_delta(support, spec);
  fit.diagnostics["w_h_smooth"] = report.w_h_smooth;
  fit.diagnostics["w_v_smooth"] = report.w_v_smooth;
  fit.diagnostics["support_size"] = static_cast<double>(support_size);
  if (report.knee) {
    fit.diagnostics["knee_index"] = static_cast<double>(report.knee->index);
    fit.diagnostics["knee_fallback"] = report.knee->fallback ? 1.0 : 0.0;
  }

  if (support_size == 0) {
    report.flags.emplace_back("empty_support");
    fit.diagnostics["empty_support"] = 1.0;
    fit.w_h = w_h;
    fit.w_v = w_v;
    fit.surface = CoefficientSurface(spec);
    const Vector zero_fit = Vector::Zero(y_fit.size());
    fit.r2_whole = r2(y_fit, zero_fit);
    fit.r2_validation = r2(y_val, Vector::Zero(y_val.size()));
    if (report.test_rows) {
      const Vector y_test = rows_of(design.Y, *report.test_rows);
      report.r2_test = r2(y_test, Vector::Zero(y_test.size()));
    }
    clock.mark("refit");
    return report;
  }

  // 5. weights under the support, then refit on every row
  if (fixed) {
    fit.r2_validation = validation_r2(w_h, w_v, support);
  } else {
    hyperopt::OptimizeOptions opts{config.hyperopt_init_count, config.hyperopt_iter_count,
                                   config.seed + 1, config.threads, initial_design};
    auto best = hyperopt::optimize_weights(
        [&](double a, double b) { return validation_r2(a, b, support); }, space, opts);
    w_h = best.w_h;
    w_v = best.w_v;
    fit.r2_validation = best.best_value;
    report.sparse_trace = std::move(best.trace);
  }
  clock.mark("optimize_sparse_weights");

  SolveReport solve_report;
  {
    auto solver = pool.acquire();
    fit.surface = fit_surface(gram_fit, penalties, w_h, w_v, support, *solver, &solve_report);
  }
  fit.w_h = w_h;
  fit.w_v = w_v;
  fit.r2_whole = r2(y_fit, predict(design, fit.surface.coefficients(), report.fit_rows));
  fit.diagnostics["solver_relative_residual"] = solve_report.relative_residual;
  fit.diagnostics["solver_iterations"] = static_cast<double>(solve_report.iterations);
  fit.diagnostics["solver_direct"] = solve_report.direct ? 1.0 : 0.0;
  if (report.test_rows) {
    report.r2_test = r2(rows_of(design.Y, *report.test_rows),
                        predict(design, fit.surface.coefficients(), *report.test_rows));
  }
  clock.mark("refit");
  return report;
}

PipelineReport run_algorithm1(const SeriesPanel& x, const SeriesPanel& y, const FitConfig& config) {
  return run_pipeline(x, y, config, SplitMode::train80_val20);
}

PipelineReport evaluate_holdout(const SeriesPanel& x, const SeriesPanel& y, const FitConfig& config) {
  return run_pipeline(x, y, config, SplitMode::train60_val20_test20);
}

namespace simulate {

StudyResult run_study(const Scenario& scenario, const FitConfig& config) {
  if (!(scenario.x.spec == scenario.truth.spec())) {
    throw DomainError("scenario driver panel and truth surface specs differ");
  }
  if (scenario.replicate_runs < 1) throw DomainError("replicate_runs must be >= 1");

  const auto truth_delta = lag_function_of(scenario.truth);
  const Vector y_true = true_response(scenario.x, scenario.truth);

  StudyResult study;
  study.sigma2 = calibrate_noise(y_true, scenario.target_r2);
  study.rows.resize(static_cast<std::size_t>(scenario.replicate_runs));

  FitConfig inner = config;
  inner.threads = 1;
  parallel_for(study.rows.size(), config.threads, [&](std::size_t i, std::size_t) {
    auto& row = study.rows[i];
    row.replicate = static_cast<int>(i);
    row.sigma2 = study.sigma2;
    try {
      const auto seed = replicate_seed(scenario.seed, static_cast<int>(i));
      const auto sim = simulate_response(scenario.x, scenario.truth, study.sigma2, seed);
      row.r2_signal_check = r2(sim.y_rows, sim.y_true_rows);
      const auto [y_anomaly, means] = ingest::seasonal_demean(sim.y);
      FitConfig cfg = inner;
      cfg.seed = seed;
      const auto report = run_algorithm1(scenario.x, y_anomaly, cfg);
      row.q = report.fit.q;
      row.w_h = report.fit.w_h;
      row.w_v = report.fit.w_v;
      row.beta_r2 = beta_r2(scenario.truth, report.fit.surface);
      row.delta_bias = delta_bias(truth_delta, report.fit.delta);
      try {
        row.delta_corr = delta_corr(truth_delta, report.fit.delta);
      } catch (const DomainError&) {
        row.delta_corr.reset();
      }
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  });

  std::vector<double> b, bias, corr, signal;
  for (const auto& row : study.rows) {
    if (!row.ok) {
      ++study.failed;
      continue;
    }
    b.push_back(row.beta_r2);
    bias.push_back(row.delta_bias);
    if (row.delta_corr) {
      corr.push_back(*row.delta_corr);
    } else {
      ++study.delta_corr_undefined;
    }
    signal.push_back(row.r2_signal_check);
  }
  study.beta_r2 = summarize(b);
  study.delta_bias = summarize(bias);
  study.delta_corr = summarize(corr);
  study.r2_signal_check = summarize(signal);
  return study;
}

}  // namespace simulate

}  // namespace hflm
