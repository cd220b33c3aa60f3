#include "hflm/io.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace hflm::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t row) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw DataError("row " + std::to_string(row) + ": cannot parse \"" + s + "\"");
  }
  return v;
}

void expect_header(std::istream& in, const std::string& expected) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: expected header " + expected);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) throw DataError("unexpected header \"" + line + "\", wanted " + expected);
}

}  // namespace

std::string format_real(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_surface_csv(std::ostream& out, const CoefficientSurface& surface) {
  const auto& spec = surface.spec();
  out << "s,t,beta\n";
  for (Index k = 0; k < spec.coefficient_count(); ++k) {
    const auto [s, t] = lag_day(k, spec);
    out << s << ',' << t << ',' << format_real(surface.coefficients()[k]) << '\n';
  }
}

void write_surface_csv(const std::filesystem::path& path, const CoefficientSurface& surface) {
  auto out = open_out(path);
  write_surface_csv(out, surface);
}

CoefficientSurface read_surface_csv(std::istream& in) {
  expect_header(in, "s,t,beta");
  struct Cell {
    Index s, t;
    double beta;
  };
  std::vector<Cell> cells;
  Index max_s = -1, max_t = -1;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != 3) throw DataError("row " + std::to_string(row) + ": expected 3 fields");
    Cell c{parse_number<Index>(f[0], row), parse_number<Index>(f[1], row),
           parse_number<double>(f[2], row)};
    if (c.s < 0 || c.t < 0) throw DataError("row " + std::to_string(row) + ": negative index");
    max_s = std::max(max_s, c.s);
    max_t = std::max(max_t, c.t);
    cells.push_back(c);
  }
  if (cells.empty()) throw DataError("surface file has no cells");
  // Smallest replicate count that makes the spec valid when D > T.
  const PanelSpec spec(max_t + 1, max_s + 1, (max_s + 1 + max_t) / (max_t + 1));
  if (static_cast<Index>(cells.size()) != spec.coefficient_count()) {
    throw DataError("surface file has " + std::to_string(cells.size()) + " cells, expected D*T = " +
                    std::to_string(spec.coefficient_count()));
  }
  Vector b(spec.coefficient_count());
  std::vector<bool> seen(static_cast<std::size_t>(spec.coefficient_count()), false);
  for (const auto& c : cells) {
    const Index k = flat_index(c.s, c.t, spec);
    if (seen[static_cast<std::size_t>(k)]) {
      throw DataError("duplicate cell s=" + std::to_string(c.s) + ", t=" + std::to_string(c.t));
    }
    seen[static_cast<std::size_t>(k)] = true;
    b[k] = c.beta;
  }
  return CoefficientSurface(spec, std::move(b));
}

CoefficientSurface read_surface_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_surface_csv(in);
}

void write_delta_csv(std::ostream& out, const LagFunction& delta) {
  out << "t,delta\n";
  for (Index t = 0; t < delta.delta.size(); ++t) out << t << ',' << delta.delta[t] << '\n';
}

void write_delta_csv(const std::filesystem::path& path, const LagFunction& delta) {
  auto out = open_out(path);
  write_delta_csv(out, delta);
}

IndexVector read_delta_csv(std::istream& in) {
  expect_header(in, "t,delta");
  std::vector<std::pair<Index, Index>> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != 2) throw DataError("row " + std::to_string(row) + ": expected 2 fields");
    rows.emplace_back(parse_number<Index>(f[0], row), parse_number<Index>(f[1], row));
  }
  IndexVector delta = IndexVector::Constant(static_cast<Index>(rows.size()), -2);
  for (const auto& [t, d] : rows) {
    if (t < 0 || t >= delta.size() || delta[t] != -2) throw DataError("delta file: bad or repeated day " + std::to_string(t));
    if (d < -1) throw DataError("delta file: lag below -1 at day " + std::to_string(t));
    delta[t] = d;
  }
  return delta;
}

IndexVector read_delta_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_delta_csv(in);
}

void write_seasonal_means_csv(const std::filesystem::path& path, const Vector& mean_x,
                              const Vector& mean_y) {
  auto out = open_out(path);
  out << "day_of_year,mean_x,mean_y\n";
  for (Index t = 0; t < mean_x.size(); ++t) {
    out << t << ',' << format_real(mean_x[t]) << ',' << format_real(mean_y[t]) << '\n';
  }
}

std::string metric_report_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    j[key] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  put("r2", report.r2);
  put("beta_r2", report.beta_r2);
  put("delta_bias", report.delta_bias);
  put("delta_corr", report.delta_corr);
  return j.dump(2);
}

MetricReport parse_metric_report_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  auto get = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
  };
  return {get("r2"), get("beta_r2"), get("delta_bias"), get("delta_corr")};
}

}  // namespace hflm::io
