#include "hflm/ingest.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace hflm;
using namespace hflm::ingest;
using namespace std::chrono;

namespace {

std::vector<RawRecord> parse(const std::string& text, const CsvSchema& schema = {}) {
  std::istringstream in(text);
  return parse_csv(in, schema);
}

std::vector<RawRecord> daily_records(int first_year, int last_year) {
  std::vector<RawRecord> out;
  for (sys_days d = year{first_year} / January / 1; d <= sys_days{year{last_year} / December / 31};
       d += days{1}) {
    out.push_back({year_month_day{d}, 1.0, 5.0, 1.0});
  }
  return out;
}

}  // namespace

TEST(ParseCsv, WellFormedRows) {
  const auto r = parse(
      "date,precip_mm,temp_c,flow_mm\n"
      "1980-01-01,2.5,-1.0,0.7\n"
      "1980-01-02,0,3.5,0.6\n"
      "1980-01-03,4,1,0.5\n");
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[1].date, year{1980} / January / 2);
  EXPECT_DOUBLE_EQ(r[0].precipitation, 2.5);
  EXPECT_DOUBLE_EQ(r[0].temperature, -1.0);
  EXPECT_DOUBLE_EQ(*r[2].flow, 0.5);
}

TEST(ParseCsv, SortsByDateAndAcceptsColumnOrder) {
  const auto r = parse(
      "flow_mm,temp_c,date,precip_mm\n"
      "0.5,1,1980-01-03,4\n"
      "0.7,-1,1980-01-01,2.5\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].date, year{1980} / January / 1);
  EXPECT_DOUBLE_EQ(r[0].precipitation, 2.5);
}

TEST(ParseCsv, MissingColumnNamesIt) {
  try {
    parse("date,precip_mm,flow_mm\n1980-01-01,1,1\n");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("temp_c"), std::string::npos);
  }
}

TEST(ParseCsv, FlowOptionalWhenNotRequired) {
  CsvSchema schema;
  schema.flow_required = false;
  const auto r = parse("date,precip_mm,temp_c\n1980-01-01,1,1\n", schema);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_FALSE(r[0].flow.has_value());
}

TEST(ParseCsv, BadRowsReported) {
  try {
    parse(
        "date,precip_mm,temp_c,flow_mm\n"
        "1980-01-01,1,1,1\n"
        "1980-02-30,1,1,1\n"
        "1980-01-03,-2,1,1\n"
        "1980-01-04,x,1,1\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("rows: 3 4 5"), std::string::npos) << e.what();
  }
}

TEST(ParseCsv, DuplicateDate) {
  EXPECT_THROW(parse("date,precip_mm,temp_c,flow_mm\n1980-01-01,1,1,1\n1980-01-01,2,2,2\n"),
               DataError);
}

TEST(ParseCsv, EmptyInput) { EXPECT_THROW(parse(""), SchemaError); }

TEST(SplitRainSnow, StrictThreshold) {
  std::vector<RawRecord> r = {{year{1980} / 1 / 1, 5.0, 0.0, {}},
                              {year{1980} / 1 / 2, 5.0, 0.01, {}},
                              {year{1980} / 1 / 3, 5.0, -3.0, {}},
                              {year{1980} / 1 / 4, 2.0, 12.0, {}}};
  const Vector rain = split_rain_snow(r);
  EXPECT_EQ(rain[0], 0.0);
  EXPECT_EQ(rain[1], 5.0);
  EXPECT_EQ(rain[2], 0.0);
  EXPECT_EQ(rain[3], 2.0);
  const Vector shifted = split_rain_snow(r, -5.0);
  EXPECT_EQ(shifted[2], 5.0);
}

TEST(LogTransformFlow, NaturalLogOfFlowPlusOne) {
  Vector q(3);
  q << 0.0, 10.0, std::exp(2.0) - 1.0;
  const Vector z = log_transform_flow(q);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_NEAR(z[1], 2.3979, 1e-4);
  EXPECT_NEAR(z[2], 2.0, 1e-12);
}

TEST(LogTransformFlow, RejectsNegative) {
  Vector q(2);
  q << 1.0, -0.5;
  EXPECT_THROW(log_transform_flow(q), DomainError);
}

TEST(RemoveLeapDays, LeapYearKeeps365) {
  const auto r = remove_leap_days(daily_records(1980, 1980));
  ASSERT_EQ(r.size(), 365u);
  for (const auto& rec : r) EXPECT_FALSE(rec.date.month() == February && rec.date.day() == day{29});
  EXPECT_EQ(r[59].date, year{1980} / March / 1);
}

TEST(RemoveLeapDays, MultiYear) {
  EXPECT_EQ(remove_leap_days(daily_records(1999, 2004)).size(), 6u * 365u);
}

TEST(RemoveLeapDays, IncompleteYear) {
  auto r = daily_records(1981, 1982);
  r.pop_back();
  EXPECT_THROW(remove_leap_days(r), DataError);
}

TEST(RemoveLeapDays, GapInsideYear) {
  auto r = daily_records(1981, 1982);
  // Move one day so 1981 still counts 365 records but has a hole.
  r.erase(r.begin() + 100);
  r.insert(r.begin() + 364, RawRecord{year{1981} / December / 31, 0, 0, 0.0});
  r.erase(r.begin() + 364);
  EXPECT_THROW(remove_leap_days(r), DataError);
}

TEST(SeasonalDemean, SmallExample) {
  const PanelSpec spec(2, 1, 2);
  Vector v(4);
  v << 1, 2, 3, 6;
  const auto [anomaly, means] = seasonal_demean({spec, v, SeriesKind::raw});
  ASSERT_EQ(means.size(), 2);
  EXPECT_DOUBLE_EQ(means[0], 2.0);
  EXPECT_DOUBLE_EQ(means[1], 4.0);
  EXPECT_DOUBLE_EQ(anomaly.values[0], -1.0);
  EXPECT_DOUBLE_EQ(anomaly.values[1], -2.0);
  EXPECT_DOUBLE_EQ(anomaly.values[2], 1.0);
  EXPECT_DOUBLE_EQ(anomaly.values[3], 2.0);
  EXPECT_EQ(anomaly.kind, SeriesKind::anomaly);
}

TEST(SeasonalDemean, ZeroMeanAndIdempotentProperty) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(3.0, 4.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const PanelSpec spec = fixture::random_spec(rng, 1, 30, 6);
    Vector v(spec.observation_count());
    for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
    const auto [once, means] = seasonal_demean({spec, v, SeriesKind::raw});
    ASSERT_TRUE(validate_panel(once).empty());
    // Reconstruct by adding the means back day by day.
    const Index T = spec.period_length();
    for (Index u = 0; u < v.size(); ++u) ASSERT_NEAR(once.values[u] + means[u % T], v[u], 1e-9);
    const auto [twice, zero] = seasonal_demean(once);
    ASSERT_LT((twice.values - once.values).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_LT(zero.cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(FlowSeries, MissingFlowRejected) {
  std::vector<RawRecord> r = {{year{1980} / 1 / 1, 1, 1, 2.0}, {year{1980} / 1 / 2, 1, 1, {}}};
  EXPECT_THROW(flow_series(r), DataError);
  r.pop_back();
  EXPECT_EQ(flow_series(r)[0], 2.0);
}
