#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scrapsig/trees.h"

namespace scrapsig {

inline constexpr std::size_t kShapleyFeatureLimit = 20;
inline constexpr std::size_t kInteractionFeatureLimit = 12;

// Bit i set = feature i present.
using Coalition = std::uint32_t;

// Path-dependent conditional expectation of the tree's class distribution:
// absent features average both children by training sample count.
std::vector<double> tree_expectation(const DecisionTree& tree, std::span<const double> x,
                                     Coalition present);

// Interventional alternative: mean over background rows of the leaf
// distribution reached by mixing x (present features) with the row.
std::vector<double> tree_expectation_interventional(const DecisionTree& tree,
                                                    std::span<const double> x,
                                                    Coalition present,
                                                    const Matrix& background);

enum class Conditioning { kPathDependent, kInterventional };

struct ShapOptions {
  Conditioning conditioning = Conditioning::kPathDependent;
  const Matrix* background = nullptr;  // required for kInterventional
};

struct ShapExplanation {
  std::vector<double> base_value;                 // per class, v(empty)
  std::vector<double> prediction;                 // per class, v(all)
  std::vector<std::vector<double>> contributions; // [feature][class]
};

ShapExplanation shapley_values(const RandomForestModel& model, std::span<const double> x,
                               const ShapOptions& options = {});

// Symmetric [i][j] matrices per class; row sums equal the Shapley values.
struct InteractionMatrix {
  std::vector<std::vector<std::vector<double>>> values;  // [class][i][j]
};

InteractionMatrix interaction_values(const RandomForestModel& model, std::span<const double> x,
                                     const ShapOptions& options = {});

struct FeatureImportance {
  std::string feature;
  double mean_abs = 0.0;
};

struct ShapSummary {
  std::vector<std::string> class_names;
  // Sorted descending, ties by feature name.
  std::vector<std::vector<FeatureImportance>> per_class;
  // Sum over classes of the per-class mean |phi|.
  std::vector<FeatureImportance> overall;
  std::vector<ShapExplanation> explanations;  // one per row of X
};

ShapSummary mean_abs_shap(const RandomForestModel& model, const Matrix& x,
                          const ShapOptions& options = {});

}  // namespace scrapsig
