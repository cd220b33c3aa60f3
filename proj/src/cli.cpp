#include "hflm/cli.hpp"

#include "hflm/io.hpp"
#include "hflm/metrics.hpp"
#include "hflm/parallel.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>

namespace hflm::cli {

namespace {

using Json = nlohmann::ordered_json;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void prepare_output_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_trace_csv(const std::filesystem::path& path,
                     const std::vector<hyperopt::TraceEntry>& trace) {
  auto out = open_out(path);
  out << "iteration,w_h,w_v,r2_val,best_so_far\n";
  for (const auto& e : trace) {
    out << e.iteration << ',' << io::format_real(e.w_h) << ',' << io::format_real(e.w_v) << ','
        << io::format_real(e.value) << ',' << io::format_real(e.best_so_far) << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, const ThresholdCurve& curve) {
  auto out = open_out(path);
  out << "index,q,r2,support_size\n";
  for (Index i = 0; i < curve.q_grid.size(); ++i) {
    out << i << ',' << io::format_real(curve.q_grid[i]) << ',' << io::format_real(curve.r2[i]) << ','
        << curve.support_sizes[static_cast<std::size_t>(i)] << '\n';
  }
}

Json rows_json(RowRange r) { return Json::array({r.begin, r.end}); }

Json fit_config_json(const FitConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["w_h"] = c.w_h ? Json(*c.w_h) : Json(nullptr);
  j["w_v"] = c.w_v ? Json(*c.w_v) : Json(nullptr);
  j["q"] = c.q ? Json(*c.q) : Json(nullptr);
  j["solver_rel_tol"] = c.solver_rel_tol;
  j["hyperopt_init_count"] = c.hyperopt_init_count;
  j["hyperopt_iter_count"] = c.hyperopt_iter_count;
  j["log_wh_bounds"] = Json::array({c.log_wh_bounds.lower, c.log_wh_bounds.upper});
  j["log_wv_bounds"] = Json::array({c.log_wv_bounds.lower, c.log_wv_bounds.upper});
  j["threshold_grid_size"] = c.threshold_grid_size;
  return j;
}

Json entries_json(const RunConfig& config) {
  Json j = Json::object();
  for (const auto& [k, v] : config.entries) j[k] = v;
  return j;
}

Json summary_json(const simulate::Summary& s) { return Json{{"mean", s.mean}, {"sd", s.sd}}; }

// Commas and newlines would break the study CSV.
std::string csv_safe(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
  return s;
}

SeriesPanel raw_panel(const PanelSpec& spec, Vector values) {
  return SeriesPanel{spec, std::move(values), SeriesKind::raw};
}

Index whole_years(std::size_t days) { return static_cast<Index>(days / 365); }

}  // namespace

void apply_overrides(RunConfig& config, const Overrides& overrides) {
  if (overrides.q) config.fit.q = *overrides.q;
  if (overrides.seed) config.fit.seed = *overrides.seed;
  const bool file_sets_threads =
      std::any_of(config.entries.begin(), config.entries.end(),
                  [](const auto& e) { return e.first == "threads"; });
  if (overrides.threads) {
    config.fit.threads = *overrides.threads;
  } else if (!file_sets_threads) {
    config.fit.threads = default_thread_count();
  }
  config.fit.validate();
}

int cmd_fit(const RunConfig& config, std::ostream&, std::ostream& log) {
  if (!config.data_path) throw ConfigError("fit needs data_path");
  log << "hflm fit: reading " << config.data_path->string() << '\n';
  const auto records = ingest::remove_leap_days(ingest::load_csv(*config.data_path, config.schema));
  const Index years = whole_years(records.size());
  const PanelSpec spec(365, config.max_lag, years);

  const auto rain = ingest::split_rain_snow(records, config.rain_snow_threshold);
  const auto flow = ingest::log_transform_flow(ingest::flow_series(records));
  const auto [x, mean_x] = ingest::seasonal_demean(raw_panel(spec, rain));
  const auto [y, mean_y] = ingest::seasonal_demean(raw_panel(spec, flow));
  log << "hflm fit: " << years << " years, T = 365, D = " << spec.max_lag_count()
      << ", usable rows = " << spec.usable_rows() << ", coefficients = " << spec.coefficient_count()
      << '\n';

  const auto report = run_pipeline(x, y, config.fit, config.split_mode);
  const auto& fit = report.fit;
  log << "hflm fit: q = " << fit.q << ", support = " << fit.diagnostics.at("support_size")
      << ", whole-data R^2 = " << fit.r2_whole << '\n';
  for (const auto& flag : report.flags) log << "hflm fit: flag " << flag << '\n';

  const auto& dir = config.output_dir;
  prepare_output_dir(dir);
  io::write_surface_csv(dir / "surface.csv", fit.surface);
  io::write_delta_csv(dir / "delta.csv", fit.delta);
  write_curve_csv(dir / "curve.csv", report.curve);
  write_trace_csv(dir / "trace_smooth.csv", report.smooth_trace);
  write_trace_csv(dir / "trace_sparse.csv", report.sparse_trace);
  io::write_seasonal_means_csv(dir / "seasonal_means.csv", mean_x, mean_y);

  Json m;
  m["command"] = "fit";
  m["config"] = entries_json(config);
  m["fit_config"] = fit_config_json(config.fit);
  m["split_mode"] = to_string(config.split_mode);
  m["data"] = Json{{"path", config.data_path->string()},
                   {"days", records.size()},
                   {"years", years},
                   {"period_length", spec.period_length()},
                   {"max_lag_count", spec.max_lag_count()},
                   {"usable_rows", spec.usable_rows()},
                   {"coefficient_count", spec.coefficient_count()}};
  m["rows"] = Json{{"train", rows_json(report.train_rows)},
                   {"validation", rows_json(report.validation_rows)},
                   {"fit", rows_json(report.fit_rows)},
                   {"test", report.test_rows ? rows_json(*report.test_rows) : Json(nullptr)}};
  m["weights"] = Json{{"smooth", {{"w_h", report.w_h_smooth}, {"w_v", report.w_v_smooth}}},
                      {"sparse", {{"w_h", fit.w_h}, {"w_v", fit.w_v}}}};
  m["q"] = fit.q;
  m["knee"] = report.knee ? Json{{"index", report.knee->index},
                                 {"fallback", report.knee->fallback},
                                 {"knee_count", report.knee->knee_count}}
                          : Json(nullptr);
  m["support_size"] = std::count(fit.support.begin(), fit.support.end(), true);
  m["r2"] = Json{{"whole", fit.r2_whole},
                 {"validation", fit.r2_validation},
                 {"test", report.r2_test ? Json(*report.r2_test) : Json(nullptr)}};
  m["flags"] = report.flags;
  Json diagnostics = Json::object();
  for (const auto& [k, v] : fit.diagnostics) diagnostics[k] = v;
  m["diagnostics"] = diagnostics;
  Json timings = Json::array();
  for (const auto& t : report.timings) timings.push_back(Json{{"stage", t.stage}, {"seconds", t.seconds}});
  m["timings"] = timings;
  write_json(dir / "manifest.json", m);
  log << "hflm fit: wrote results to " << dir.string() << '\n';
  return kOk;
}

int cmd_simulate(const RunConfig& config, std::ostream&, std::ostream& log) {
  SeriesPanel raw = [&] {
    if (config.rainfall_path) {
      log << "hflm simulate: rainfall from " << config.rainfall_path->string() << '\n';
      auto schema = config.schema;
      schema.flow_required = false;
      const auto records = ingest::remove_leap_days(ingest::load_csv(*config.rainfall_path, schema));
      const PanelSpec spec(365, config.max_lag, whole_years(records.size()));
      return raw_panel(spec, ingest::split_rain_snow(records, config.rain_snow_threshold));
    }
    const PanelSpec spec(config.period_length, config.max_lag, config.replicate_count);
    return simulate::synthetic_rainfall(spec, config.fit.seed);
  }();
  const PanelSpec spec = raw.spec;

  simulate::TruthRecipe recipe = config.bump;
  if (config.truth_kind == TruthKind::from_file) recipe = simulate::FromFile{*config.truth_path};

  simulate::Scenario scenario{config.scenario_name,
                              ingest::seasonal_demean(raw).first,
                              simulate::synth_truth(spec, recipe),
                              config.target_r2,
                              config.replicate_runs,
                              config.fit.seed};
  log << "hflm simulate: scenario " << scenario.name << ", T = " << spec.period_length()
      << ", D = " << spec.max_lag_count() << ", n = " << spec.replicate_count() << ", "
      << scenario.replicate_runs << " replicates at target R^2 " << scenario.target_r2 << '\n';

  const auto study = simulate::run_study(scenario, config.fit);

  const auto& dir = config.output_dir;
  prepare_output_dir(dir);
  {
    auto out = open_out(dir / "study.csv");
    out << "replicate,beta_r2,delta_bias,delta_corr,r2_signal_check,sigma2,q,w_h,w_v,status\n";
    for (const auto& r : study.rows) {
      out << r.replicate << ',';
      if (r.ok) {
        out << io::format_real(r.beta_r2) << ',' << io::format_real(r.delta_bias) << ','
            << (r.delta_corr ? io::format_real(*r.delta_corr) : std::string()) << ','
            << io::format_real(r.r2_signal_check) << ',' << io::format_real(r.sigma2) << ','
            << io::format_real(r.q) << ',' << io::format_real(r.w_h) << ',' << io::format_real(r.w_v)
            << ',' << (r.delta_corr ? "ok" : "ok;delta_corr undefined (constant sequence)") << '\n';
      } else {
        out << ",,,,," << io::format_real(r.sigma2) << ",,,," << csv_safe("failed: " + r.error) << '\n';
      }
    }
  }

  Json s;
  s["command"] = "simulate";
  s["config"] = entries_json(config);
  s["fit_config"] = fit_config_json(config.fit);
  s["scenario"] = Json{{"name", scenario.name},
                       {"period_length", spec.period_length()},
                       {"max_lag_count", spec.max_lag_count()},
                       {"replicate_count", spec.replicate_count()},
                       {"usable_rows", spec.usable_rows()},
                       {"coefficient_count", spec.coefficient_count()},
                       {"target_r2", scenario.target_r2},
                       {"replicate_runs", scenario.replicate_runs},
                       {"seed", scenario.seed}};
  s["sigma2"] = study.sigma2;
  s["completed"] = scenario.replicate_runs - study.failed;
  s["failed"] = study.failed;
  s["delta_corr_undefined"] = study.delta_corr_undefined;
  s["beta_r2"] = summary_json(study.beta_r2);
  s["delta_bias"] = summary_json(study.delta_bias);
  s["delta_corr"] = summary_json(study.delta_corr);
  s["r2_signal_check"] = summary_json(study.r2_signal_check);
  write_json(dir / "summary.json", s);

  log << "hflm simulate: beta-R^2 " << study.beta_r2.mean << " (" << study.beta_r2.sd
      << "), delta bias " << study.delta_bias.mean << " (" << study.delta_bias.sd
      << "), delta corr " << study.delta_corr.mean << " (" << study.delta_corr.sd << "), "
      << study.failed << " failed\n";
  if (study.failed == scenario.replicate_runs) {
    log << "hflm simulate: every replicate failed, first error: " << study.rows.front().error << '\n';
    return kNumericalError;
  }
  return kOk;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  if (!config.truth_surface || !config.estimate_surface) {
    throw ConfigError("eval needs truth_surface and estimate_surface");
  }
  const auto truth = io::read_surface_csv(*config.truth_surface);
  const auto estimate = io::read_surface_csv(*config.estimate_surface);
  if (!(truth.spec() == estimate.spec())) {
    throw DataError("spec mismatch: truth is D=" + std::to_string(truth.spec().max_lag_count()) +
                    ", T=" + std::to_string(truth.spec().period_length()) + ", estimate is D=" +
                    std::to_string(estimate.spec().max_lag_count()) +
                    ", T=" + std::to_string(estimate.spec().period_length()));
  }
  auto lag_function = [&](const std::optional<std::filesystem::path>& path,
                          const CoefficientSurface& surface) {
    if (!path) return lag_function_of(surface);
    auto delta = io::read_delta_csv(*path);
    if (delta.size() != surface.spec().period_length()) {
      throw DataError("spec mismatch: " + path->string() + " has " + std::to_string(delta.size()) +
                      " days, surface has T=" + std::to_string(surface.spec().period_length()));
    }
    if (delta.maxCoeff() >= surface.spec().max_lag_count()) {
      throw DataError("spec mismatch: " + path->string() + " has a lag beyond D-1");
    }
    return LagFunction{surface.spec(), std::move(delta)};
  };
  const auto truth_delta = lag_function(config.truth_delta, truth);
  const auto estimate_delta = lag_function(config.estimate_delta, estimate);

  MetricReport report;
  std::vector<std::string> warnings;
  report.beta_r2 = beta_r2(truth, estimate);
  report.delta_bias = delta_bias(truth_delta, estimate_delta);
  try {
    report.delta_corr = delta_corr(truth_delta, estimate_delta);
  } catch (const DomainError& e) {
    warnings.emplace_back(e.what());
    log << "hflm eval: " << e.what() << '\n';
  }
  auto j = Json::parse(io::metric_report_json(report));
  j["warnings"] = warnings;
  out << j.dump(2) << '\n';
  return kOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Dynamically sparse historical functional linear models"};
  app.name("hflm");
  app.require_subcommand(1);

  std::string config_path;
  std::optional<double> q;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Run configuration (key = value)")->required();
    sub->add_option("--q", q, "Threshold override");
    sub->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Random seed");
  };
  auto* fit = app.add_subcommand("fit", "Fit a surface to paired rainfall/flow data");
  auto* sim = app.add_subcommand("simulate", "Run a simulation study");
  auto* eval = app.add_subcommand("eval", "Compare an estimated surface with a truth surface");
  add_common(fit);
  add_common(sim);
  add_common(eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? kOk : kUsage;
  }

  try {
    auto config = load_run_config(config_path);
    apply_overrides(config, Overrides{q, threads, seed});
    if (fit->parsed()) return cmd_fit(config, out, log);
    if (sim->parsed()) return cmd_simulate(config, out, log);
    return cmd_eval(config, out, log);
  } catch (const ConfigError& e) {
    log << "hflm: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    log << "hflm: numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    log << "hflm: data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "hflm: data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    log << "hflm: failure: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace hflm::cli
