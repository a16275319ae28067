#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "scrapsig/error.h"
#include "scrapsig/ingest.h"

using namespace scrapsig;

namespace {

ParseResult parse(const std::string& text, const ColumnMapping& m = {}, ParseOptions o = {}) {
  std::istringstream in(text);
  return parse_records(in, m, o);
}

const std::string kHeader = "hs_code,year,flow,reporter,partner,value_usd,mass_kg\n";

AnnualSeries series(std::string code, std::vector<std::tuple<int, double, double>> pts) {
  AnnualSeries s;
  s.hs_code = std::move(code);
  for (auto [y, kg, usd] : pts) s.points.push_back(SeriesPoint::make(y, kg, usd));
  return s;
}

std::vector<double> prices(const SeriesSet& set) {
  std::vector<double> out;
  for (const auto& s : set)
    for (const auto& p : s.points)
      if (p.unit_price) out.push_back(*p.unit_price);
  return out;
}

}  // namespace

TEST(ParseRecords, SingleRowMapsFields) {
  auto r = parse(kHeader + "391590,2022,import,MY,DE,1000,2000\n");
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.rejected.empty());
  const auto& t = r.records[0];
  EXPECT_EQ(t.hs_code, "391590");
  EXPECT_EQ(t.year, 2022);
  EXPECT_EQ(t.flow, Flow::kImport);
  EXPECT_EQ(t.reporter, "MY");
  EXPECT_EQ(t.partner, "DE");
  EXPECT_EQ(t.value_usd, 1000.0);
  EXPECT_EQ(t.mass_kg, 2000.0);
  auto set = aggregate_annual(r.records);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_DOUBLE_EQ(*set[0].points[0].unit_price, 0.5);
}

TEST(ParseRecords, MalformedMassRejected) {
  auto r = parse(kHeader + "391590,2022,import,MY,DE,1000,abc\n");
  EXPECT_TRUE(r.records.empty());
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 2u);
  EXPECT_NE(r.rejected[0].reason.find("mass_kg"), std::string::npos);
}

TEST(ParseRecords, RejectsBadCodesYearsFlowsAndShortRows) {
  auto r = parse(kHeader +
                 "3915,2022,import,MY,DE,1,1\n"
                 "391590,20x2,import,MY,DE,1,1\n"
                 "391590,2022,transit,MY,DE,1,1\n"
                 "391590,2022,import\n"
                 "391590,2022,import,MY,DE,-5,1\n"
                 "391590,2022,M,MY,DE,1,1\n");
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.rejected.size(), 5u);
}

TEST(ParseRecords, MissingMappedColumnIsConfigError) {
  EXPECT_THROW(parse("hs_code,year\n391590,2022\n"), ConfigError);
  EXPECT_THROW(parse(""), ConfigError);
}

TEST(ParseRecords, SkipsMetadataCommentsAndBlankLines) {
  auto r = parse("# schema_version=1\n" + kHeader + "\n391590,2022,import,MY,DE,1,2\n# tail\n");
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(ParseRecords, QuotedFieldsAndCustomDelimiter) {
  ParseOptions o;
  o.delimiter = ';';
  auto r = parse("hs_code;year;flow;reporter;partner;value_usd;mass_kg\n"
                 "\"391590\";2022;import;\"M;Y\";DE;10;20\n",
                 {}, o);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].reporter, "M;Y");
}

TEST(ParseRecords, YearWindowFilter) {
  ParseOptions o;
  o.min_year = 2021;
  o.max_year = 2022;
  auto r = parse(kHeader + "391590,2020,import,MY,DE,1,1\n391590,2021,import,MY,DE,1,1\n"
                           "391590,2023,import,MY,DE,1,1\n",
                 {}, o);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.rejected.size(), 2u);
}

// Expected values worked out by hand from the three fixture rows.
TEST(ParseRecords, ComtradePresetFixture) {
  std::ifstream in(std::string(SCRAPSIG_TEST_DATA) + "/comtrade_3row.csv");
  ASSERT_TRUE(in);
  auto r = parse_records(in, ColumnMapping::preset("comtrade"));
  ASSERT_EQ(r.records.size(), 2u);
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].line, 4u);  // "1,000" is not a plain decimal
  EXPECT_EQ(r.records[0].mass_kg, 12500.5);
  EXPECT_EQ(r.records[0].value_usd, 8300.25);
  EXPECT_EQ(r.records[1].partner, "JPN");
  auto set = aggregate_annual(r.records, Flow::kImport);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set[0].points[0].kg, 20000.0);
  EXPECT_EQ(set[0].points[0].usd, 12500.0);
  EXPECT_EQ(*set[0].points[0].unit_price, 0.625);
}

TEST(ColumnMapping, UnknownPresetIsConfigError) {
  EXPECT_THROW(ColumnMapping::preset("eurostat"), ConfigError);
}

TEST(HsCode, Validity) {
  EXPECT_TRUE(is_valid_hs_code("391590"));
  EXPECT_TRUE(is_valid_hs_code("3915900010"));
  EXPECT_FALSE(is_valid_hs_code("39159"));
  EXPECT_FALSE(is_valid_hs_code("39159000100"));
  EXPECT_FALSE(is_valid_hs_code("3915a0"));
}

TEST(AggregateAnnual, SumsRowsPerCodeYear) {
  std::vector<TradeRecord> recs = {
      {"390210", 2021, Flow::kImport, "MY", "DE", 50, 100},
      {"390210", 2021, Flow::kImport, "MY", "JP", 150, 400},
  };
  auto set = aggregate_annual(recs);
  ASSERT_EQ(set.size(), 1u);
  ASSERT_EQ(set[0].points.size(), 1u);
  const auto& p = set[0].points[0];
  EXPECT_EQ(p.year, 2021);
  EXPECT_EQ(p.kg, 500.0);
  EXPECT_EQ(p.usd, 200.0);
  EXPECT_DOUBLE_EQ(*p.unit_price, 0.4);
}

TEST(AggregateAnnual, ZeroMassKeepsPointWithoutPrice) {
  auto set = aggregate_annual({{"390210", 2021, Flow::kImport, "MY", "DE", 30, 0}});
  ASSERT_EQ(set[0].points.size(), 1u);
  EXPECT_EQ(set[0].points[0].usd, 30.0);
  EXPECT_FALSE(set[0].points[0].unit_price.has_value());
}

TEST(AggregateAnnual, GroupByMatchesBruteForce) {
  std::vector<TradeRecord> recs;
  const char* codes[] = {"392690", "390410", "390729"};
  for (int c = 0; c < 3; ++c)
    for (int y = 2020; y < 2025; ++y)
      for (int rep = 0; rep < 3; ++rep)
        recs.push_back({codes[c], y, Flow::kImport, "MY", "P" + std::to_string(rep),
                        double(c * 100 + y % 7 + rep), double(c + 1) * (y - 2019) + rep});
  std::reverse(recs.begin(), recs.end());
  auto set = aggregate_annual(recs);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set[0].hs_code, "390410");
  for (const auto& s : set) {
    ASSERT_EQ(s.points.size(), 5u);
    for (const auto& p : s.points) {
      double kg = 0, usd = 0;
      for (const auto& r : recs)
        if (r.hs_code == s.hs_code && r.year == p.year) kg += r.mass_kg, usd += r.value_usd;
      EXPECT_EQ(p.kg, kg);
      EXPECT_EQ(p.usd, usd);
    }
  }
}

TEST(AggregateAnnual, FlowAndReporterFilters) {
  std::vector<TradeRecord> recs = {
      {"390210", 2021, Flow::kImport, "MY", "DE", 1, 1},
      {"390210", 2021, Flow::kExport, "MY", "DE", 2, 2},
      {"390210", 2021, Flow::kImport, "TH", "DE", 4, 4},
  };
  EXPECT_EQ(aggregate_annual(recs, Flow::kExport)[0].points[0].kg, 2.0);
  EXPECT_EQ(aggregate_annual(recs, Flow::kImport, "MY")[0].points[0].kg, 1.0);
  EXPECT_EQ(aggregate_annual(recs)[0].points[0].kg, 7.0);
}

TEST(InterpolateGaps, FillsSingleYearGap) {
  auto s = series("390210", {{2020, 100, 50}, {2022, 300, 90}});
  auto f = interpolate_gaps(s, {});
  ASSERT_EQ(f.points.size(), 3u);
  EXPECT_EQ(f.points[1].year, 2021);
  EXPECT_EQ(f.points[1].kg, 200.0);
  EXPECT_EQ(f.points[1].usd, 70.0);
  EXPECT_EQ(f.points[1].origin, PointOrigin::kInterpolated);
  EXPECT_EQ(f.points[0].origin, PointOrigin::kObserved);
}

TEST(InterpolateGaps, ContiguousUnchanged) {
  auto s = series("390210", {{2020, 1, 1}, {2021, 2, 2}, {2022, 3, 3}});
  auto f = interpolate_gaps(s, {});
  ASSERT_EQ(f.points.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(f.points[i].kg, s.points[i].kg);
}

TEST(InterpolateGaps, RespectsMaxGap) {
  auto s = series("390210", {{2020, 1, 1}, {2023, 4, 4}});
  EXPECT_EQ(interpolate_gaps(s, {}).points.size(), 2u);
  CleaningConfig c;
  c.max_interp_gap = 2;
  EXPECT_EQ(interpolate_gaps(s, c).points.size(), 4u);
}

TEST(ExcludeSparse, TwentyPercentMissingIsKept) {
  auto four = series("390210", {{2020, 1, 1}, {2021, 1, 1}, {2022, 1, 1}, {2024, 1, 1}});
  auto three = series("390410", {{2020, 1, 1}, {2021, 1, 1}, {2022, 1, 1}});
  auto r = exclude_sparse({four, three}, 2020, 2024, {});
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].hs_code, "390210");
  ASSERT_EQ(r.dropped.size(), 1u);
  EXPECT_EQ(r.dropped[0].hs_code, "390410");
  EXPECT_DOUBLE_EQ(r.dropped[0].missing_fraction, 0.4);
}

TEST(ExcludeSparse, CompleteCodesNothingDropped) {
  auto s = series("390210", {{2020, 1, 1}, {2021, 1, 1}});
  EXPECT_TRUE(exclude_sparse({s, s}, 2020, 2021, {}).dropped.empty());
}

TEST(AdjustInflation, IdentityAndSingleDivision) {
  auto s = series("390210", {{2020, 10, 100}, {2021, 10, 110}});
  CleaningConfig c;
  c.cpi_index = {{2020, 1.0}, {2021, 1.0}};
  auto same = adjust_inflation(s, c);
  EXPECT_EQ(same.points[1].usd, 110.0);
  c.cpi_index = {{2020, 1.0}, {2021, 1.10}};
  auto adj = adjust_inflation(s, c);
  EXPECT_DOUBLE_EQ(adj.points[1].usd, 100.0);
  EXPECT_DOUBLE_EQ(*adj.points[1].unit_price, 10.0);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(adj.points[i].kg, s.points[i].kg);
}

TEST(AdjustInflation, MissingDeflatorIsConfigError) {
  auto s = series("390210", {{2020, 10, 100}, {2021, 10, 110}});
  CleaningConfig c;
  c.cpi_index = {{2020, 1.0}};
  EXPECT_THROW(adjust_inflation(s, c), ConfigError);
}

TEST(Percentile, LinearInterpolationOnOneToHundred) {
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  EXPECT_NEAR(percentile_linear(v, 0.01), 1.99, 1e-12);
  EXPECT_NEAR(percentile_linear(v, 0.99), 99.01, 1e-12);
  EXPECT_EQ(percentile_linear(v, 0.0), 1.0);
  EXPECT_EQ(percentile_linear(v, 1.0), 100.0);
  EXPECT_THROW(percentile_linear({}, 0.5), DataError);
}

TEST(CapOutliers, OneToHundredWinsorized) {
  AnnualSeries s;
  s.hs_code = "390210";
  for (int i = 1; i <= 100; ++i) s.points.push_back(SeriesPoint::make(1900 + i, 1.0, i));
  auto r = cap_outliers({s}, {});
  EXPECT_EQ(r.capped_points, 2u);
  auto p = prices(r.series);
  EXPECT_NEAR(*std::min_element(p.begin(), p.end()), 1.99, 1e-12);
  EXPECT_NEAR(*std::max_element(p.begin(), p.end()), 99.01, 1e-12);
  EXPECT_TRUE(r.series[0].points[0].capped);
  EXPECT_EQ(*r.series[0].points[0].uncapped_unit_price, 1.0);
  EXPECT_NEAR(r.series[0].points[0].usd, 1.99, 1e-12);
}

TEST(CapOutliers, IdenticalValuesUnchanged) {
  auto s = series("390210", {{2020, 2, 6}, {2021, 4, 12}, {2022, 1, 3}});
  auto r = cap_outliers({s}, {});
  EXPECT_EQ(r.capped_points, 0u);
  for (double p : prices(r.series)) EXPECT_EQ(p, 3.0);
}

TEST(CapOutliers, IdempotentAndBoundedOnRandomData) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 gen(seed);
    std::lognormal_distribution<double> d(0.0, 1.5);
    SeriesSet set;
    for (int c = 0; c < 7; ++c) {
      AnnualSeries s;
      s.hs_code = "39" + std::to_string(1000 + c);
      for (int y = 2015; y < 2025; ++y) s.points.push_back(SeriesPoint::make(y, 10.0, 10.0 * d(gen)));
      set.push_back(s);
    }
    auto raw = prices(set);
    std::sort(raw.begin(), raw.end());
    const double lo = percentile_linear(raw, 0.01), hi = percentile_linear(raw, 0.99);
    auto once = cap_outliers(set, {});
    auto p = prices(once.series);
    EXPECT_DOUBLE_EQ(*std::min_element(p.begin(), p.end()), lo);
    EXPECT_DOUBLE_EQ(*std::max_element(p.begin(), p.end()), hi);
    auto twice = cap_outliers(once.series, {});
    EXPECT_EQ(prices(twice.series), p) << "seed " << seed;
    EXPECT_EQ(twice.capped_points, once.capped_points);
  }
}

TEST(CapOutliers, PerCodeScope) {
  auto a = series("390210", {{2020, 1, 1}, {2021, 1, 2}, {2022, 1, 3}});
  auto b = series("390410", {{2020, 1, 100}, {2021, 1, 200}, {2022, 1, 300}});
  CleaningConfig c;
  c.cap_per_code = true;
  c.cap_lo = 0.25;
  c.cap_hi = 0.75;
  auto r = cap_outliers({a, b}, c);
  EXPECT_DOUBLE_EQ(*r.series[0].points[0].unit_price, 1.5);
  EXPECT_DOUBLE_EQ(*r.series[1].points[2].unit_price, 250.0);
}

TEST(CleaningConfig, RejectsBadValues) {
  CleaningConfig c;
  c.cap_lo = 0.9;
  c.cap_hi = 0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  CleaningConfig d;
  d.cpi_index = {{2020, 0.0}};
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(CleanSeries, EndToEndReport) {
  auto a = series("390210", {{2020, 100, 50}, {2022, 300, 90}, {2023, 1, 1}, {2024, 1, 1}});
  auto b = series("390410", {{2020, 1, 1}});
  auto r = clean_series({a, b}, 2020, 2024, {});
  EXPECT_EQ(r.report.interpolated_points, 1u);
  ASSERT_EQ(r.report.dropped.size(), 1u);
  EXPECT_EQ(r.report.dropped[0].hs_code, "390410");
  ASSERT_EQ(r.series.size(), 1u);
  EXPECT_EQ(r.series[0].points.size(), 5u);
}
