#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scrapsig/segment.h"

namespace scrapsig {

// 1 - sum (n_i / N)^2. Throws DataError when all counts are zero.
double gini(std::span<const double> class_counts);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // x[feature] <= threshold
  int right = -1;    // x[feature] > threshold
  double gini = 0.0;
  std::size_t n_samples = 0;
  std::vector<double> class_counts;
  std::size_t predicted_class = 0;  // argmax of class_counts, lowest id on ties

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t predict(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  // Features used by at least one split.
  std::vector<std::size_t> used_features() const;
};

struct TreeOptions {
  std::optional<int> max_depth;
  std::size_t min_samples_split = 2;
  // Features sampled (without replacement) per node; nullopt = all.
  std::optional<std::size_t> features_per_split;
  std::uint64_t seed = 0;
};

// Greedy CART on Gini gain. Candidate thresholds are midpoints between
// consecutive distinct values; ties go to the lowest feature index, then the
// lowest threshold. `y` holds class ids in [0, n_classes).
DecisionTree tree_fit(const Matrix& x, const std::vector<std::size_t>& y,
                      std::size_t n_classes, const TreeOptions& options = {});

// Fits on the given row multiset (bootstrap samples repeat rows).
DecisionTree tree_fit_rows(const Matrix& x, const std::vector<std::size_t>& y,
                           std::size_t n_classes, std::vector<std::size_t> rows,
                           const TreeOptions& options);

struct ForestOptions {
  std::size_t n_trees = 100;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  // nullopt = ceil(sqrt(p)); 0 = all features.
  std::optional<std::size_t> features_per_split;
  std::optional<int> max_depth;
  std::size_t min_samples_split = 2;
};

struct RandomForestModel {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::vector<DecisionTree> trees;
  std::vector<std::uint64_t> tree_seeds;
  ForestOptions options;

  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_classes() const { return class_names.size(); }
};

RandomForestModel forest_fit(const Matrix& x, const std::vector<std::size_t>& y,
                             std::vector<std::string> feature_names,
                             std::vector<std::string> class_names,
                             const ForestOptions& options);

// Majority vote over trees, ties to the lowest class id.
std::size_t predict(const RandomForestModel& model, std::span<const double> x);
// Mean of per-tree leaf class frequencies.
std::vector<double> predict_proba(const RandomForestModel& model, std::span<const double> x);

using Fold = std::pair<std::vector<std::size_t>, std::vector<std::size_t>>;  // (train, test)

std::vector<Fold> stratified_kfold(const std::vector<std::size_t>& y, std::size_t k,
                                   std::uint64_t seed);

// Single stratified split; test_fraction of each class (rounded) goes to test.
Fold stratified_holdout(const std::vector<std::size_t>& y, double test_fraction,
                        std::uint64_t seed);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std across folds
};

using ConfusionMatrix = std::vector<std::vector<std::size_t>>;  // [actual][predicted]

double accuracy(const ConfusionMatrix& cm);
// 0/0 is reported as 0.
std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& cm);

struct FoldResult {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  ConfusionMatrix binary_confusion;  // 0 = high-risk, 1 = low-risk
  double binary_accuracy = 0.0;
  std::vector<ClassMetrics> binary;
};

struct CVReport {
  std::vector<std::string> class_names;
  std::vector<FoldResult> folds;
  MeanStd accuracy;
  std::vector<MeanStd> precision, recall, f1;  // per class
  ConfusionMatrix total_confusion;
  MeanStd binary_accuracy;
  std::vector<MeanStd> binary_precision, binary_recall, binary_f1;  // [high, low]
  std::vector<bool> class_is_high_risk;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  bool holdout = false;
};

struct EvaluateOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  ForestOptions forest;
  // Single stratified 75/25 split instead of k folds.
  bool holdout = false;
  double holdout_fraction = 0.25;
};

// Class names that parse as archetypes are rolled up by is_high_risk; other
// names count as low-risk unless listed in high_risk_classes.
CVReport evaluate(const Matrix& x, const std::vector<std::size_t>& y,
                  const std::vector<std::string>& feature_names,
                  const std::vector<std::string>& class_names, const EvaluateOptions& options,
                  const std::vector<std::string>& high_risk_classes = {});

// Table layout: one row per metric, high-risk and low-risk columns.
std::string format_cv_table(const CVReport& report);

}  // namespace scrapsig
