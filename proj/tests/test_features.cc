#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scrapsig/error.h"
#include "scrapsig/features.h"

using namespace scrapsig;

namespace {

AnnualSeries make(std::vector<double> kg, std::vector<double> price, int first = 2020) {
  AnnualSeries s;
  s.hs_code = "390210";
  for (std::size_t i = 0; i < kg.size(); ++i)
    s.points.push_back(SeriesPoint::make(first + int(i), kg[i], kg[i] * price[i]));
  return s;
}

// Textbook two-pass slope, written independently of the library.
double closed_form_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i];
  const double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i)
    sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

}  // namespace

TEST(OlsSlope, HandExamples) {
  std::vector<double> x = {0, 1, 2, 3, 4};
  EXPECT_EQ(ols_slope(x, std::vector<double>{7, 7, 7, 7, 7}), 0.0);
  EXPECT_EQ(ols_slope(x, std::vector<double>{1, 3, 5, 7, 9}), 2.0);
  EXPECT_NEAR(ols_slope(std::vector<double>{0, 1, 2, 3}, std::vector<double>{1, 2, 2, 4}), 0.9,
              1e-12);
}

TEST(OlsSlope, Errors) {
  EXPECT_THROW(ols_slope(std::vector<double>{1}, std::vector<double>{1}), InsufficientDataError);
  EXPECT_THROW(ols_slope(std::vector<double>{2, 2}, std::vector<double>{1, 3}), DataError);
}

TEST(OlsSlope, MatchesClosedFormOnRandomData) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d(0, 50);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x, y;
    const int n = 2 + rep % 9;
    for (int i = 0; i < n; ++i) x.push_back(2000 + i), y.push_back(1e3 + d(gen));
    EXPECT_NEAR(ols_slope(x, y), closed_form_slope(x, y), 1e-12 * (1 + std::abs(closed_form_slope(x, y))));
  }
}

TEST(OlsFit, InterceptAtZero) {
  auto f = ols_fit(std::vector<double>{0, 1, 2}, std::vector<double>{100, 200, 300});
  EXPECT_DOUBLE_EQ(f.slope, 100.0);
  EXPECT_DOUBLE_EQ(f.intercept, 100.0);
  EXPECT_DOUBLE_EQ(f.at(10), 1100.0);
}

TEST(ComputeFeatures, ConstantSeries) {
  auto fv = compute_features(make({5, 5, 5}, {1, 1, 1}));
  EXPECT_EQ(fv.price_volatility, 0.0);
  EXPECT_EQ(fv.kg_trend, 0.0);
  EXPECT_EQ(fv.price_trend, 0.0);
  EXPECT_EQ(fv.volatility_x_price_trend, 0.0);
  EXPECT_EQ(fv.avg_kg, 5.0);
  EXPECT_DOUBLE_EQ(fv.log_avg_kg, std::log1p(5.0));
  EXPECT_DOUBLE_EQ(fv.log_avg_price, std::log1p(1.0));
}

TEST(ComputeFeatures, TwoPoints) {
  auto fv = compute_features(make({10, 10}, {2.0, 1.0}));
  EXPECT_DOUBLE_EQ(fv.price_trend, -1.0);
  EXPECT_NEAR(fv.price_volatility, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(fv.volatility_x_price_trend, -std::sqrt(0.5), 1e-15);
}

TEST(ComputeFeatures, AtRiskShape) {
  auto fv = compute_features(make({100, 200, 300}, {3, 2, 1}));
  EXPECT_DOUBLE_EQ(fv.kg_trend, 100.0);
  EXPECT_DOUBLE_EQ(fv.price_trend, -1.0);
  EXPECT_TRUE(signature_flag(fv));
  EXPECT_EQ(fv.first_year, 2020);
  EXPECT_EQ(fv.span_years, 2);
}

TEST(ComputeFeatures, SkipsUnpricedYearsForPriceTerms) {
  auto s = make({10, 10, 10}, {1, 2, 3});
  s.points[1] = SeriesPoint::make(2021, 0, 5);
  auto fv = compute_features(s);
  EXPECT_DOUBLE_EQ(fv.price_trend, 1.0);
  EXPECT_DOUBLE_EQ(fv.avg_price, 2.0);
  EXPECT_THROW(compute_features(make({10}, {1})), InsufficientDataError);
}

TEST(SignatureFlag, StrictInequalities) {
  FeatureVector fv;
  fv.kg_trend = 100, fv.price_trend = -1;
  EXPECT_TRUE(signature_flag(fv));
  fv.kg_trend = 0;
  EXPECT_FALSE(signature_flag(fv));
  fv.kg_trend = 5, fv.price_trend = 0.2;
  EXPECT_FALSE(signature_flag(fv));
  fv.price_trend = 0;
  EXPECT_FALSE(signature_flag(fv));
}

TEST(FeatureSets, Names) {
  EXPECT_EQ(feature_set("full8").size(), 8u);
  EXPECT_EQ(feature_set("primary5").size(), 5u);
  EXPECT_THROW(feature_set("nope"), ConfigError);
  FeatureVector fv;
  EXPECT_THROW(fv.get("nope"), ConfigError);
}

TEST(ZScore, TwoPointColumnAndZeroVariance) {
  FeatureVector a, b;
  a.hs_code = "390210", a.avg_kg = 1, a.avg_price = 4;
  b.hs_code = "390410", b.avg_kg = 3, b.avg_price = 4;
  auto m = zscore_normalize({a, b}, {"avg_kg", "avg_price"});
  EXPECT_NEAR(m.values[0][0], -std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(m.values[1][0], std::sqrt(0.5), 1e-15);
  EXPECT_EQ(m.values[0][1], 0.0);
  EXPECT_EQ(m.values[1][1], 0.0);
  EXPECT_EQ(m.values.size(), 2u);
  EXPECT_THROW(zscore_normalize({a}, {"avg_kg"}), InsufficientDataError);
}

TEST(ZScore, MomentsAndRoundTripOnRandomData) {
  std::mt19937_64 gen(5);
  std::lognormal_distribution<double> d(10, 2);
  std::vector<FeatureVector> fvs;
  for (int i = 0; i < 128; ++i) {
    AnnualSeries s;
    s.hs_code = std::to_string(390000 + i);
    for (int y = 0; y < 5; ++y) s.points.push_back(SeriesPoint::make(2020 + y, d(gen), d(gen)));
    fvs.push_back(compute_features(s));
  }
  auto m = zscore_normalize(fvs, all_feature_names());
  for (std::size_t j = 0; j < m.n_cols(); ++j) {
    std::vector<double> col;
    for (const auto& row : m.values) col.push_back(row[j]);
    EXPECT_LT(std::abs(mean(col)), 1e-9);
    EXPECT_LT(std::abs(sample_std(col) - 1.0), 1e-9);
  }
  for (std::size_t i = 0; i < fvs.size(); ++i) {
    auto back = m.inverse(m.values[i]);
    for (std::size_t j = 0; j < back.size(); ++j) {
      const double orig = fvs[i].get(m.cols[j]);
      // rounding scales with the column, not the value
      const double scale = std::abs(m.means[j]) + m.stds[j] * (1.0 + std::abs(m.values[i][j]));
      EXPECT_NEAR(back[j], orig, 1e-12 * scale);
    }
    auto z = m.transform(fvs[i]);
    for (std::size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(z[j], m.values[i][j], 1e-12);
  }
}
