#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scrapsig/features.h"

namespace scrapsig {

using Matrix = std::vector<std::vector<double>>;

struct KMeansOptions {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-6;  // stop when the summed squared centroid shift <= tol
};

struct KMeansModel {
  std::size_t k = 0;
  Matrix centroids;                  // k x p
  std::vector<std::size_t> labels;   // per training row
  double inertia = 0.0;
  std::uint64_t seed = 0;
  int n_init = 0;
  int iterations_run = 0;
  // Inertia after each assignment step of the winning restart.
  std::vector<double> inertia_history;
};

// Nearest centroid by squared Euclidean distance; ties go to the lowest id.
std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x);

double squared_distance(std::span<const double> a, std::span<const double> b);

// Lloyd iterations from k-means++ seeding; the best of n_init restarts wins.
KMeansModel kmeans_fit(const Matrix& x, const KMeansOptions& options);

std::size_t assign(const KMeansModel& model, std::span<const double> x);

struct ElbowResult {
  std::vector<std::pair<std::size_t, double>> curve;  // (k, inertia)
  std::optional<std::size_t> recommended_k;
  std::vector<std::string> warnings;
};

// Interior k maximizing inertia(k-1) - 2 inertia(k) + inertia(k+1); first
// wins on ties. nullopt for curves shorter than 3 points.
std::optional<std::size_t> max_curvature_k(
    const std::vector<std::pair<std::size_t, double>>& curve);

ElbowResult elbow_scan(const Matrix& x, std::size_t k_min, std::size_t k_max,
                       const KMeansOptions& base);

enum class Archetype { kHighVolumeCommodity, kEmergingCommodity, kStableMidMarket, kHighPriceNiche };

inline constexpr std::size_t kArchetypeCount = 4;

std::string_view to_string(Archetype a);
Archetype parse_archetype(std::string_view name);
// HighVolumeCommodity and EmergingCommodity carry the at-risk signature.
bool is_high_risk(Archetype a);

// Raw-unit summary of one centroid used by the labeling rules.
struct CentroidProfile {
  double avg_price = 0.0;
  double avg_kg = 0.0;
  double kg_trend = 0.0;
};

// Inverse-transforms the centroids; requires avg_price, avg_kg and kg_trend
// among the normalized columns.
std::vector<CentroidProfile> centroid_profiles(const KMeansModel& model,
                                               const NormalizedMatrix& normalization);

struct ArchetypeLabeling {
  std::vector<Archetype> by_cluster;
  std::vector<std::string> rationale;
};

ArchetypeLabeling label_archetypes(const std::vector<CentroidProfile>& profiles);

}  // namespace scrapsig
