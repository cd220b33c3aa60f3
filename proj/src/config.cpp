#include "hflm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>

namespace hflm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("key '" + key + "': cannot parse \"" + text + "\"");
  }
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base)>;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

template <class T, class F>
Setter number(F field) {
  return [field](RunConfig& c, const std::string& key, const std::string& value,
                 const std::filesystem::path&) { field(c) = parse_value<T>(key, value); };
}

template <class F>
Setter text(F field) {
  return [field](RunConfig& c, const std::string&, const std::string& value,
                 const std::filesystem::path&) { field(c) = value; };
}

template <class F>
Setter path(F field) {
  return [field](RunConfig& c, const std::string&, const std::string& value,
                 const std::filesystem::path& base) { field(c) = resolve(base, value); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"output_dir", path([](RunConfig& c) -> auto& { return c.output_dir; })},
      {"seed", number<std::uint64_t>([](RunConfig& c) -> auto& { return c.fit.seed; })},
      {"threads", number<int>([](RunConfig& c) -> auto& { return c.fit.threads; })},
      {"q", number<double>([](RunConfig& c) -> auto& { return c.fit.q; })},
      {"w_h", number<double>([](RunConfig& c) -> auto& { return c.fit.w_h; })},
      {"w_v", number<double>([](RunConfig& c) -> auto& { return c.fit.w_v; })},
      {"solver_rel_tol", number<double>([](RunConfig& c) -> auto& { return c.fit.solver_rel_tol; })},
      {"hyperopt_init_count",
       number<int>([](RunConfig& c) -> auto& { return c.fit.hyperopt_init_count; })},
      {"hyperopt_iter_count",
       number<int>([](RunConfig& c) -> auto& { return c.fit.hyperopt_iter_count; })},
      {"log_wh_min", number<double>([](RunConfig& c) -> auto& { return c.fit.log_wh_bounds.lower; })},
      {"log_wh_max", number<double>([](RunConfig& c) -> auto& { return c.fit.log_wh_bounds.upper; })},
      {"log_wv_min", number<double>([](RunConfig& c) -> auto& { return c.fit.log_wv_bounds.lower; })},
      {"log_wv_max", number<double>([](RunConfig& c) -> auto& { return c.fit.log_wv_bounds.upper; })},
      {"threshold_grid_size",
       number<int>([](RunConfig& c) -> auto& { return c.fit.threshold_grid_size; })},

      {"data_path", path([](RunConfig& c) -> auto& { return c.data_path; })},
      {"date_column", text([](RunConfig& c) -> auto& { return c.schema.date; })},
      {"precip_column", text([](RunConfig& c) -> auto& { return c.schema.precipitation; })},
      {"temp_column", text([](RunConfig& c) -> auto& { return c.schema.temperature; })},
      {"flow_column", text([](RunConfig& c) -> auto& { return c.schema.flow; })},
      {"rain_snow_threshold", number<double>([](RunConfig& c) -> auto& { return c.rain_snow_threshold; })},
      {"max_lag", number<Index>([](RunConfig& c) -> auto& { return c.max_lag; })},
      {"split_mode",
       [](RunConfig& c, const std::string& key, const std::string& value, const std::filesystem::path&) {
         if (value == "train80_val20") {
           c.split_mode = SplitMode::train80_val20;
         } else if (value == "train60_val20_test20") {
           c.split_mode = SplitMode::train60_val20_test20;
         } else {
           throw ConfigError("key '" + key + "': expected train80_val20 or train60_val20_test20");
         }
       }},

      {"scenario_name", text([](RunConfig& c) -> auto& { return c.scenario_name; })},
      {"target_r2", number<double>([](RunConfig& c) -> auto& { return c.target_r2; })},
      {"replicate_runs", number<int>([](RunConfig& c) -> auto& { return c.replicate_runs; })},
      {"truth_recipe",
       [](RunConfig& c, const std::string& key, const std::string& value, const std::filesystem::path&) {
         if (value == "smooth_bump") {
           c.truth_kind = TruthKind::smooth_bump;
         } else if (value == "from_file") {
           c.truth_kind = TruthKind::from_file;
         } else {
           throw ConfigError("key '" + key + "': expected smooth_bump or from_file");
         }
       }},
      {"truth_path", path([](RunConfig& c) -> auto& { return c.truth_path; })},
      {"bump_center", number<double>([](RunConfig& c) -> auto& { return c.bump.center_t; })},
      {"bump_lag_min", number<double>([](RunConfig& c) -> auto& { return c.bump.lag_min; })},
      {"bump_lag_max", number<double>([](RunConfig& c) -> auto& { return c.bump.lag_max; })},
      {"bump_amplitude", number<double>([](RunConfig& c) -> auto& { return c.bump.amplitude; })},
      {"rainfall_path", path([](RunConfig& c) -> auto& { return c.rainfall_path; })},
      {"period_length", number<Index>([](RunConfig& c) -> auto& { return c.period_length; })},
      {"replicate_count", number<Index>([](RunConfig& c) -> auto& { return c.replicate_count; })},

      {"truth_surface", path([](RunConfig& c) -> auto& { return c.truth_surface; })},
      {"estimate_surface", path([](RunConfig& c) -> auto& { return c.estimate_surface; })},
      {"truth_delta", path([](RunConfig& c) -> auto& { return c.truth_delta; })},
      {"estimate_delta", path([](RunConfig& c) -> auto& { return c.estimate_delta; })},
  };
  return table;
}

void check(const RunConfig& c) {
  if (!(c.target_r2 > 0.0 && c.target_r2 < 1.0)) {
    throw ConfigError("key 'target_r2': must lie strictly between 0 and 1");
  }
  if (c.replicate_runs < 1) throw ConfigError("key 'replicate_runs': must be >= 1");
  if (c.max_lag < 1) throw ConfigError("key 'max_lag': must be >= 1");
  if (c.period_length < 1) throw ConfigError("key 'period_length': must be >= 1");
  if (c.replicate_count < 1) throw ConfigError("key 'replicate_count': must be >= 1");
  if (c.truth_kind == TruthKind::from_file && !c.truth_path) {
    throw ConfigError("truth_recipe = from_file needs truth_path");
  }
  c.fit.validate();
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig config;
  config.output_dir = base_dir;
  std::set<std::string> seen;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("key '" + key + "' given twice");
    if (value.empty()) throw ConfigError("key '" + key + "' has no value");
    it->second(config, key, value, base_dir);
    config.entries.emplace_back(key, value);
  }
  check(config);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_run_config(in, path.has_parent_path() ? path.parent_path() : ".");
}

std::string to_string(SplitMode mode) {
  return mode == SplitMode::train80_val20 ? "train80_val20" : "train60_val20_test20";
}

}  // namespace hflm::cli
