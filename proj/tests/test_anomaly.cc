#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "scrapsig/anomaly.h"
#include "scrapsig/error.h"

using namespace scrapsig;

namespace {

AnnualSeries kg_series(const std::string& code, std::vector<double> kg) {
  AnnualSeries s;
  s.hs_code = code;
  for (std::size_t i = 0; i < kg.size(); ++i)
    s.points.push_back(SeriesPoint::make(2019 + int(i), kg[i], kg[i]));
  return s;
}

// `depth` internal nodes; x < 1 follows the left spine to a size-1 leaf.
IsolationTree chain(int depth) {
  IsolationTree t;
  for (int d = 0; d < depth; ++d) {
    IsolationNode n;
    n.feature = 0;
    n.split = 1.0;
    n.right = 2 * d + 1;
    n.left = 2 * d + 2;
    n.size = 8;
    IsolationNode other;
    other.size = 1;
    t.nodes.push_back(n);
    t.nodes.push_back(other);
  }
  IsolationNode leaf;
  leaf.size = 1;
  t.nodes.push_back(leaf);
  return t;
}

}  // namespace

TEST(PathLength, AverageFormula) {
  EXPECT_EQ(average_path_length(0), 0.0);
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_EQ(average_path_length(2), 1.0);
  EXPECT_NEAR(average_path_length(8), 2 * (std::log(7.0) + 0.5772156649) - 2.0 * 7 / 8, 1e-15);
}

TEST(Score, FixedPointsAndLimits) {
  for (std::size_t psi : {2u, 8u, 64u, 256u})
    EXPECT_NEAR(score_from_path(average_path_length(psi), psi), 0.5, 1e-12);
  EXPECT_NEAR(score_from_path(0.0, 256), 1.0, 1e-15);
  EXPECT_LT(score_from_path(1e-9, 256), 1.0);
  EXPECT_GT(score_from_path(1e-9, 256), 0.999999);
}

TEST(Score, HandBuiltTwoTreeModel) {
  IsolationForestModel m;
  m.n_trees = 2;
  m.psi = 8;
  m.dims = 1;
  m.trees = {chain(1), chain(3)};
  std::vector<double> x = {0.0};
  EXPECT_EQ(m.trees[0].path_length(x), 1.0);
  EXPECT_EQ(m.trees[1].path_length(x), 3.0);
  const double c8 = 2 * (std::log(7.0) + 0.5772156649) - 2.0 * 7 / 8;
  EXPECT_NEAR(anomaly_score(m, x), std::exp2(-2.0 / c8), 1e-15);
}

TEST(IForest, IdenticalPointsGiveSingleLeaves) {
  Matrix pts(10, std::vector<double>{1.0, 2.0});
  auto m = iforest_fit(pts, {.n_trees = 20, .psi = 256, .seed = 1});
  EXPECT_EQ(m.psi, 10u);
  for (const auto& t : m.trees) EXPECT_EQ(t.nodes.size(), 1u);
  const double expected = std::exp2(-average_path_length(10) / average_path_length(10));
  for (const auto& p : pts) EXPECT_NEAR(anomaly_score(m, p), expected, 1e-15);
}

TEST(IForest, SameSeedSameTrees) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> d;
  Matrix pts;
  for (int i = 0; i < 300; ++i) pts.push_back({d(gen), d(gen)});
  auto a = iforest_fit(pts, {.n_trees = 30, .psi = 64, .seed = 9});
  auto b = iforest_fit(pts, {.n_trees = 30, .psi = 64, .seed = 9});
  for (std::size_t t = 0; t < a.trees.size(); ++t) {
    ASSERT_EQ(a.trees[t].nodes.size(), b.trees[t].nodes.size());
    for (std::size_t n = 0; n < a.trees[t].nodes.size(); ++n) {
      EXPECT_EQ(a.trees[t].nodes[n].feature, b.trees[t].nodes[n].feature);
      EXPECT_EQ(a.trees[t].nodes[n].split, b.trees[t].nodes[n].split);
    }
    EXPECT_LE(a.trees[t].depth(), a.height_limit);
  }
}

TEST(IForest, FarOutlierScoresHighest) {
  int wins = 0;
  for (unsigned seed = 0; seed < 100; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> d(0, 0.1);
    Matrix pts;
    for (int i = 0; i < 99; ++i) pts.push_back({d(gen), d(gen)});
    pts.push_back({5.0, 5.0});
    auto m = iforest_fit(pts, {.n_trees = 100, .psi = 256, .seed = seed});
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double s = anomaly_score(m, pts[i]);
      if (s > best) best = s, arg = i;
    }
    wins += arg == 99;
  }
  EXPECT_GE(wins, 95);
}

TEST(IForest, Errors) {
  EXPECT_THROW(iforest_fit({{1.0}}, {}), InsufficientDataError);
  EXPECT_THROW(iforest_fit({{1.0}, {2.0}}, {.n_trees = 0}), ConfigError);
  EXPECT_THROW(iforest_fit({{1.0}, {2.0, 3.0}}, {}), DataError);
}

TEST(YearAnomalies, FlatSeriesHasNoFlags) {
  auto r = flag_year_anomalies({kg_series("390210", std::vector<double>(6, 100.0))}, {});
  ASSERT_EQ(r.flags.size(), 6u);
  for (const auto& f : r.flags) EXPECT_FALSE(f.is_anomaly);
}

TEST(YearAnomalies, SpikeIsUniqueFlag) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    AnomalyOptions o;
    o.seed = seed;
    auto r = flag_year_anomalies({kg_series("390210", {100, 100, 1000, 100, 100, 100})}, o);
    int flagged = 0;
    for (const auto& f : r.flags) {
      flagged += f.is_anomaly;
      if (f.year == 2021) EXPECT_TRUE(f.is_anomaly) << "seed " << seed;
      EXPECT_EQ(f.threshold_used, 0.6);
    }
    EXPECT_EQ(flagged, 1) << "seed " << seed;
  }
}

TEST(YearAnomalies, ShortSeriesSkippedWithWarning) {
  auto r = flag_year_anomalies({kg_series("390210", {1, 2}), kg_series("390410", {1, 2, 3})}, {});
  EXPECT_EQ(r.flags.size(), 3u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("390210"), std::string::npos);
}

TEST(YearAnomalies, PooledModeScoresEveryPoint) {
  AnomalyOptions o;
  o.mode = AnomalyMode::kPooled;
  SeriesSet set;
  for (int c = 0; c < 20; ++c) set.push_back(kg_series(std::to_string(390200 + c), {100, 101, 99, 100, 102}));
  set.push_back(kg_series("399999", {100, 100, 900, 100, 100}));
  auto r = flag_year_anomalies(set, o);
  EXPECT_EQ(r.flags.size(), 105u);
  double spike = 0, rest = 0;
  for (const auto& f : r.flags) {
    double& slot = f.hs_code == "399999" && f.year == 2021 ? spike : rest;
    slot = std::max(slot, f.score);
  }
  EXPECT_GT(spike, rest);
  EXPECT_EQ(parse_anomaly_mode("pooled"), AnomalyMode::kPooled);
  EXPECT_THROW(parse_anomaly_mode("global"), ConfigError);
}
