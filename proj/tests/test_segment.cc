#include <gtest/gtest.h>

#include <random>

#include "oracles.h"
#include "scrapsig/error.h"
#include "scrapsig/parallel.h"
#include "scrapsig/segment.h"

using namespace scrapsig;

namespace {

// Gaussian blobs around the given centers; labels are blob ids.
std::pair<Matrix, std::vector<std::size_t>> blobs(const Matrix& centers, std::size_t per,
                                                  double sigma, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0, sigma);
  Matrix x;
  std::vector<std::size_t> y;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (std::size_t i = 0; i < per; ++i) {
      std::vector<double> row = centers[c];
      for (auto& v : row) v += d(gen);
      x.push_back(row);
      y.push_back(c);
    }
  return {x, y};
}

}  // namespace

TEST(AriOracle, KnownValues) {
  EXPECT_DOUBLE_EQ(oracle::adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}), 1.0);
  // Two labels merged: pairs agree 3, expected 1.4, max 5 -> 1.6 / 3.6.
  EXPECT_NEAR(oracle::adjusted_rand_index({0, 0, 1, 1, 2, 2}, {0, 0, 1, 1, 1, 1}), 4.0 / 9.0,
              1e-12);
}

TEST(KMeans, SingleClusterIsColumnMean) {
  auto [x, y] = blobs({{0, 0, 0}, {3, -1, 2}}, 20, 0.5, 1);
  auto m = kmeans_fit(x, {.k = 1, .seed = 3});
  std::vector<double> mean(3, 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < 3; ++j) mean[j] += r[j] / double(x.size());
  double inertia = 0;
  for (const auto& r : x)
    for (std::size_t j = 0; j < 3; ++j) inertia += (r[j] - mean[j]) * (r[j] - mean[j]);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m.centroids[0][j], mean[j], 1e-12);
  EXPECT_NEAR(m.inertia, inertia, 1e-9);
}

TEST(KMeans, ThreeSeparatedBlobsRecovered) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    auto [x, y] = blobs({{0, 0}, {5, 0}, {0, 5}}, 30, 0.05, seed);
    auto m = kmeans_fit(x, {.k = 3, .seed = seed});
    EXPECT_DOUBLE_EQ(oracle::adjusted_rand_index(m.labels, y), 1.0);
  }
}

TEST(KMeans, DeterministicAndThreadInvariant) {
  auto [x, y] = blobs({{0, 0}, {2, 1}, {1, 3}, {4, 4}}, 25, 0.8, 9);
  set_max_threads(1);
  auto a = kmeans_fit(x, {.k = 4, .seed = 42});
  set_max_threads(4);
  auto b = kmeans_fit(x, {.k = 4, .seed = 42});
  set_max_threads(0);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KMeans, InertiaHistoryNonIncreasing) {
  auto [x, y] = blobs({{0, 0}, {1, 1}, {2, 0}}, 40, 0.7, 4);
  auto m = kmeans_fit(x, {.k = 3, .seed = 1, .n_init = 1});
  for (std::size_t i = 1; i < m.inertia_history.size(); ++i)
    EXPECT_LE(m.inertia_history[i], m.inertia_history[i - 1] + 1e-9);
}

TEST(KMeans, Errors) {
  Matrix x = {{0.0}, {1.0}};
  EXPECT_THROW(kmeans_fit(x, {.k = 3}), DataError);
  EXPECT_THROW(kmeans_fit(x, {.k = 0}), ConfigError);
}

TEST(Elbow, MaxCurvatureOnKneeCurve) {
  std::vector<std::pair<std::size_t, double>> curve = {
      {1, 1000}, {2, 600}, {3, 300}, {4, 100}, {5, 90}, {6, 82}, {7, 76}};
  EXPECT_EQ(max_curvature_k(curve), 4u);
  EXPECT_FALSE(max_curvature_k({{1, 10}, {2, 5}}).has_value());
}

TEST(Elbow, FourBlobsRecommendFour) {
  auto [x, y] = blobs({{0, 0, 0}, {6, 0, 0}, {0, 6, 0}, {0, 0, 6}}, 32, 0.3, 2);
  auto r = elbow_scan(x, 1, 10, {.seed = 42});
  ASSERT_EQ(r.curve.size(), 10u);
  EXPECT_EQ(r.recommended_k, 4u);
}

TEST(Elbow, SingleKGivesWarning) {
  auto [x, y] = blobs({{0, 0}}, 5, 1.0, 2);
  auto r = elbow_scan(x, 1, 1, {});
  EXPECT_EQ(r.curve.size(), 1u);
  EXPECT_FALSE(r.recommended_k.has_value());
  EXPECT_FALSE(r.warnings.empty());
  EXPECT_THROW(elbow_scan(x, 1, 6, {}), DataError);
}

TEST(Assign, ZeroDistanceTiesAndReplay) {
  KMeansModel m;
  m.k = 4;
  m.centroids = {{0, 0}, {-1, 0}, {5, 5}, {1, 0}};
  EXPECT_EQ(assign(m, std::vector<double>{5, 5}), 2u);
  EXPECT_EQ(assign(m, std::vector<double>{0, 0}), 0u);
  m.centroids = {{9, 9}, {-1, 0}, {5, 5}, {1, 0}};
  EXPECT_EQ(assign(m, std::vector<double>{0, 0}), 1u);  // equidistant from 1 and 3

  auto [x, y] = blobs({{0, 0}, {3, 3}}, 30, 1.0, 6);
  auto fit = kmeans_fit(x, {.k = 2, .seed = 8});
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(assign(fit, x[i]), fit.labels[i]);
}

TEST(LabelArchetypes, DescriptionsMapToNames) {
  // cluster 0: mid price stable, 1: high price, 2: cheap bulk, 3: growing
  std::vector<CentroidProfile> p = {
      {3.0, 4e7, 1e4}, {12.0, 8e6, -1e5}, {0.8, 9e7, 5e5}, {2.5, 2e7, 4e6}};
  auto l = label_archetypes(p);
  EXPECT_EQ(l.by_cluster[0], Archetype::kStableMidMarket);
  EXPECT_EQ(l.by_cluster[1], Archetype::kHighPriceNiche);
  EXPECT_EQ(l.by_cluster[2], Archetype::kHighVolumeCommodity);
  EXPECT_EQ(l.by_cluster[3], Archetype::kEmergingCommodity);
}

TEST(LabelArchetypes, TieOnPriceGoesToLowerId) {
  std::vector<CentroidProfile> p = {{1, 1, 1}, {5, 2, 0}, {5, 3, 0}, {1, 0, 2}};
  auto l = label_archetypes(p);
  EXPECT_EQ(l.by_cluster[1], Archetype::kHighPriceNiche);
  EXPECT_NE(l.rationale[1].find("tie"), std::string::npos);
  EXPECT_THROW(label_archetypes({{1, 1, 1}}), ConfigError);
}

TEST(Archetype, NamesRoundTrip) {
  for (auto a : {Archetype::kHighVolumeCommodity, Archetype::kEmergingCommodity,
                 Archetype::kStableMidMarket, Archetype::kHighPriceNiche})
    EXPECT_EQ(parse_archetype(to_string(a)), a);
  EXPECT_THROW(parse_archetype("Other"), DataError);
  EXPECT_TRUE(is_high_risk(Archetype::kEmergingCommodity));
  EXPECT_FALSE(is_high_risk(Archetype::kHighPriceNiche));
}
