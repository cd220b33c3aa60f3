#include "hflm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hflm::ingest {

namespace {

using namespace std::chrono;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    auto first = field.find_first_not_of(" \t\r\"");
    auto last = field.find_last_not_of(" \t\r\"");
    fields.push_back(first == std::string::npos ? std::string{}
                                                : field.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<year_month_day> parse_date(const std::string& s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto ok = [&](int from, int len, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data() + from, s.data() + from + len, out);
    return ec == std::errc{} && ptr == s.data() + from + len;
  };
  if (!ok(0, 4, y) || !ok(5, 2, m) || !ok(8, 2, d)) return std::nullopt;
  year_month_day date{year{y}, month{m}, day{d}};
  if (!date.ok()) return std::nullopt;
  return date;
}

bool is_leap_day(const year_month_day& d) {
  return d.month() == February && d.day() == day{29};
}

}  // namespace

std::vector<RawRecord> parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty CSV: header row missing");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_fields(line);

  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw SchemaError("missing column \"" + name + "\"");
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto date_col = *column(schema.date, true);
  const auto precip_col = *column(schema.precipitation, true);
  const auto temp_col = *column(schema.temperature, true);
  const auto flow_col = column(schema.flow, schema.flow_required);

  std::vector<RawRecord> records;
  std::vector<std::size_t> bad_rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    auto field = [&](std::size_t c) -> std::string { return c < fields.size() ? fields[c] : ""; };

    auto date = parse_date(field(date_col));
    auto precip = parse_real(field(precip_col));
    auto temp = parse_real(field(temp_col));
    std::optional<double> flow;
    bool flow_ok = true;
    if (flow_col) {
      flow = parse_real(field(*flow_col));
      flow_ok = flow.has_value() || (!schema.flow_required && field(*flow_col).empty());
    }
    if (!date || !precip || !temp || !flow_ok || *precip < 0.0 || (flow && *flow < 0.0)) {
      bad_rows.push_back(row);
      continue;
    }
    records.push_back({*date, *precip, *temp, flow});
  }

  if (!bad_rows.empty()) {
    std::string msg = "unparseable or out-of-range rows:";
    for (std::size_t i = 0; i < bad_rows.size() && i < 20; ++i) msg += " " + std::to_string(bad_rows[i]);
    if (bad_rows.size() > 20) msg += " ... (" + std::to_string(bad_rows.size()) + " total)";
    throw DataError(msg);
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].date == records[i - 1].date) {
      std::ostringstream os;
      os << "duplicate date " << static_cast<int>(records[i].date.year()) << '-'
         << static_cast<unsigned>(records[i].date.month()) << '-'
         << static_cast<unsigned>(records[i].date.day());
      throw DataError(os.str());
    }
  }
  return records;
}

std::vector<RawRecord> load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_csv(in, schema);
}

Vector split_rain_snow(const std::vector<RawRecord>& records, double threshold_celsius) {
  Vector rain(static_cast<Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    rain[static_cast<Index>(i)] =
        records[i].temperature > threshold_celsius ? records[i].precipitation : 0.0;
  }
  return rain;
}

Vector log_transform_flow(const Vector& flow) {
  for (Index i = 0; i < flow.size(); ++i) {
    if (!(flow[i] >= 0.0)) {
      throw DomainError("negative flow " + std::to_string(flow[i]) + " at index " + std::to_string(i));
    }
  }
  return flow.array().log1p().matrix();
}

std::vector<RawRecord> remove_leap_days(const std::vector<RawRecord>& records) {
  std::vector<RawRecord> kept;
  kept.reserve(records.size());
  std::map<int, int> per_year;
  for (const auto& r : records) {
    if (is_leap_day(r.date)) continue;
    kept.push_back(r);
    ++per_year[static_cast<int>(r.date.year())];
  }

  std::string incomplete;
  for (const auto& [y, count] : per_year) {
    if (count != 365) incomplete += " " + std::to_string(y) + " (" + std::to_string(count) + " days)";
  }
  if (!incomplete.empty()) throw DataError("incomplete years:" + incomplete);

  for (std::size_t i = 1; i < kept.size(); ++i) {
    auto step = sys_days{kept[i].date} - sys_days{kept[i - 1].date};
    bool leap_gap = step == days{2} && is_leap_day(year_month_day{sys_days{kept[i - 1].date} + days{1}});
    if (step != days{1} && !leap_gap) {
      throw DataError("non-daily spacing after record " + std::to_string(i - 1));
    }
  }
  return kept;
}

std::pair<SeriesPanel, Vector> seasonal_demean(const SeriesPanel& panel) {
  const Index T = panel.spec.period_length();
  const Index n = panel.spec.replicate_count();
  // T x n view: row t is day-of-year t, column i is replicate i.
  Eigen::Map<const Eigen::MatrixXd> by_day(panel.values.data(), T, n);
  Vector means = by_day.rowwise().mean();

  SeriesPanel out{panel.spec, panel.values, SeriesKind::anomaly};
  Eigen::Map<Eigen::MatrixXd>(out.values.data(), T, n).colwise() -= means;
  return {std::move(out), std::move(means)};
}

Vector flow_series(const std::vector<RawRecord>& records) {
  Vector flow(static_cast<Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].flow) throw DataError("missing flow at record " + std::to_string(i));
    flow[static_cast<Index>(i)] = *records[i].flow;
  }
  return flow;
}

}  // namespace hflm::ingest
