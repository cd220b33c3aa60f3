#pragma once

#include "hflm/core.hpp"

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hflm::ingest {

/// One day of catchment-averaged forcing and (optionally) streamflow.
struct RawRecord {
  std::chrono::year_month_day date;
  double precipitation = 0.0;  // mm/day
  double temperature = 0.0;    // deg C
  std::optional<double> flow;  // mm/day
};

struct CsvSchema {
  std::string date = "date";
  std::string precipitation = "precip_mm";
  std::string temperature = "temp_c";
  std::string flow = "flow_mm";
  bool flow_required = true;
};

std::vector<RawRecord> load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
std::vector<RawRecord> parse_csv(std::istream& in, const CsvSchema& schema = {});

/// Rain is precipitation on days strictly warmer than the threshold.
Vector split_rain_snow(const std::vector<RawRecord>& records, double threshold_celsius = 0.0);

/// Natural log(Q + 1).
Vector log_transform_flow(const Vector& flow);

/// Drops Feb-29 and checks that every year left has 365 consecutive days.
std::vector<RawRecord> remove_leap_days(const std::vector<RawRecord>& records);

/// Subtracts the across-replicate mean of each day of the year. Returns the
/// anomaly panel and the T seasonal means.
std::pair<SeriesPanel, Vector> seasonal_demean(const SeriesPanel& panel);

/// Flow column of the records; DataError if any value is missing.
Vector flow_series(const std::vector<RawRecord>& records);

}  // namespace hflm::ingest
