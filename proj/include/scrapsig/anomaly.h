#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scrapsig/ingest.h"
#include "scrapsig/segment.h"

namespace scrapsig {

inline constexpr double kEulerGamma = 0.5772156649;

// Harmonic-number approximation ln(i) + gamma.
double harmonic_approx(double i);

// Average unsuccessful-search path length of a binary search tree on m points:
// 2 H(m-1) - 2(m-1)/m for m > 2, c(2) = 1, c(m <= 1) = 0.
double average_path_length(std::size_t m);

struct IsolationNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1;     // x[feature] < split
  int right = -1;    // x[feature] >= split
  std::size_t size = 0;

  bool is_leaf() const { return feature < 0; }
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root

  double path_length(std::span<const double> x) const;
  int depth() const;
};

struct IsolationForestModel {
  std::size_t n_trees = 0;
  std::size_t psi = 0;  // effective subsample size, min(requested, n)
  int height_limit = 0;
  std::size_t dims = 0;
  std::uint64_t seed = 0;
  std::vector<IsolationTree> trees;
};

struct IsolationForestOptions {
  std::size_t n_trees = 100;
  std::size_t psi = 256;
  std::uint64_t seed = 0;
};

IsolationForestModel iforest_fit(const Matrix& points, const IsolationForestOptions& options);

double mean_path_length(const IsolationForestModel& model, std::span<const double> x);

// 2^(-E[h(x)] / c(psi)), in (0, 1].
double anomaly_score(const IsolationForestModel& model, std::span<const double> x);

// Score for a given mean path length.
double score_from_path(double mean_path, std::size_t psi);

enum class AnomalyMode { kPerCode, kPooled };

std::string_view to_string(AnomalyMode mode);
AnomalyMode parse_anomaly_mode(std::string_view name);

struct AnomalyFlag {
  std::string hs_code;
  int year = 0;
  double observed_kg = 0.0;
  double score = 0.0;
  double threshold_used = 0.0;
  bool is_anomaly = false;
};

struct AnomalyOptions {
  AnomalyMode mode = AnomalyMode::kPerCode;
  double threshold = 0.6;
  std::size_t n_trees = 100;
  std::size_t psi = 256;
  std::uint64_t seed = 0;
};

struct AnomalyResult {
  std::vector<AnomalyFlag> flags;  // every scored point, flagged or not
  std::vector<std::string> warnings;
};

// Series with fewer than 3 points are skipped with a warning.
AnomalyResult flag_year_anomalies(const SeriesSet& series, const AnomalyOptions& options);

}  // namespace scrapsig
