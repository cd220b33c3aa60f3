#pragma once

#include "hflm/core.hpp"
#include "hflm/metrics.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace hflm::io {

/// Shortest decimal string that parses back to the same double.
std::string format_real(double v);

/// Long-format surface: header "s,t,beta", one row per grid cell, 0-based
/// lag and day, ordered by flat index. Values round-trip exactly.
void write_surface_csv(std::ostream& out, const CoefficientSurface& surface);
void write_surface_csv(const std::filesystem::path& path, const CoefficientSurface& surface);

/// Infers D and T from the largest indices. Every cell must appear once.
/// The replicate count of the returned spec is the smallest valid one,
/// ceil(D / T).
CoefficientSurface read_surface_csv(std::istream& in);
CoefficientSurface read_surface_csv(const std::filesystem::path& path);

/// Header "t,delta"; delta = -1 marks a day without any effect.
void write_delta_csv(std::ostream& out, const LagFunction& delta);
void write_delta_csv(const std::filesystem::path& path, const LagFunction& delta);
IndexVector read_delta_csv(std::istream& in);
IndexVector read_delta_csv(const std::filesystem::path& path);

/// Header "day_of_year,mean_x,mean_y".
void write_seasonal_means_csv(const std::filesystem::path& path, const Vector& mean_x,
                              const Vector& mean_y);

std::string metric_report_json(const MetricReport& report);
MetricReport parse_metric_report_json(const std::string& text);

}  // namespace hflm::io
