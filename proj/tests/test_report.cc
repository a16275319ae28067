#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "scrapsig/config.h"
#include "scrapsig/report.h"
#include "scrapsig/svg.h"

using namespace scrapsig;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

AnnualSeries series() {
  AnnualSeries s;
  s.hs_code = "390210";
  for (int y = 2020; y <= 2024; ++y) s.points.push_back(SeriesPoint::make(y, 100.0 + y - 2020, 500.0));
  return s;
}

}  // namespace

TEST(Report, CsvMetadataLine) {
  RunConfig c;
  std::ostringstream out;
  write_csv_metadata(out, metadata_block(c, "watchlist"));
  EXPECT_EQ(out.str(), "# schema_version=1 stage=watchlist seed=42 config_hash=" + c.hash() + "\n");
}

TEST(Report, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5})
    EXPECT_EQ(std::stod(format_double(v)), v);
  EXPECT_EQ(format_double(4.0), "4");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Report, SegmentsCsvRoundTrip) {
  std::vector<SegmentRow> rows = {{"390210", 2, Archetype::kStableMidMarket},
                                  {"391590", 0, std::nullopt}};
  std::ostringstream out;
  write_segments_csv(out, rows);
  std::istringstream in(out.str());
  auto back = read_segments_csv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].archetype, Archetype::kStableMidMarket);
  EXPECT_EQ(back[1].cluster, 0u);
  EXPECT_FALSE(back[1].archetype.has_value());
}

TEST(Report, EmptyWatchlistStillWritesHeader) {
  std::ostringstream out;
  write_watchlist_csv(out, {});
  EXPECT_EQ(count(out.str(), "\n"), 1u);
  EXPECT_EQ(out.str().rfind("risk_rank,hs_code,", 0), 0u);
}

TEST(Svg, SingleDashedForecastFromLastObservedYear) {
  auto s = series();
  auto f = forecast_linear(s, 2030);
  auto svg = render_series_svg(s, &f, {2022}, "stage=watchlist");
  EXPECT_EQ(count(svg, "stroke-dasharray"), 1u);
  EXPECT_NE(svg.find("data-start-year=\"2024\""), std::string::npos);
  EXPECT_EQ(count(svg, "class=\"anomaly\""), 1u);
  EXPECT_NE(svg.find("<!-- stage=watchlist -->"), std::string::npos);
  // Both subpaths of the dashed projection start at the same x.
  std::smatch m;
  const std::string d = svg.substr(svg.find("class=\"forecast\""));
  ASSERT_TRUE(std::regex_search(d, m, std::regex("d=\"M([0-9.]+),[^M]*M([0-9.]+),")));
  EXPECT_EQ(m[1], m[2]);
  auto bare = render_series_svg(s, nullptr, {});
  EXPECT_EQ(count(bare, "stroke-dasharray"), 0u);
}

TEST(Svg, EscapesText) {
  EXPECT_EQ(xml_escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
  auto scatter = render_segment_scatter_svg({});
  EXPECT_NE(scatter.find("</svg>"), std::string::npos);
}
