#include "scrapsig/explain.h"

#include <algorithm>
#include <bit>
#include <cmath>

#include "scrapsig/error.h"
#include "scrapsig/parallel.h"

namespace scrapsig {
namespace {

void leaf_distribution(const TreeNode& leaf, std::vector<double>& out, double weight) {
  const double n = static_cast<double>(leaf.n_samples);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] += weight * leaf.class_counts[c] / n;
}

void expectation_walk(const DecisionTree& tree, int node, std::span<const double> x,
                      Coalition present, double weight, std::vector<double>& out) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf()) {
    leaf_distribution(n, out, weight);
    return;
  }
  if (present & (Coalition{1} << n.feature)) {
    expectation_walk(tree, x[n.feature] <= n.threshold ? n.left : n.right, x, present, weight,
                     out);
    return;
  }
  const double total = static_cast<double>(n.n_samples);
  const auto& l = tree.nodes[n.left];
  const auto& r = tree.nodes[n.right];
  expectation_walk(tree, n.left, x, present, weight * (l.n_samples / total), out);
  expectation_walk(tree, n.right, x, present, weight * (r.n_samples / total), out);
}

// v(S) for every coalition S, as [mask][class].
std::vector<std::vector<double>> coalition_values(const RandomForestModel& model,
                                                  std::span<const double> x,
                                                  const ShapOptions& options) {
  const std::size_t p = model.n_features();
  const std::size_t nc = model.n_classes();
  const std::size_t masks = std::size_t{1} << p;
  if (options.conditioning == Conditioning::kInterventional &&
      (options.background == nullptr || options.background->empty()))
    throw ConfigError("interventional Shapley values need a background set");
  std::vector<std::vector<double>> v(masks, std::vector<double>(nc, 0.0));
  for (std::size_t s = 0; s < masks; ++s) {
    for (const auto& tree : model.trees) {
      const auto e =
          options.conditioning == Conditioning::kPathDependent
              ? tree_expectation(tree, x, static_cast<Coalition>(s))
              : tree_expectation_interventional(tree, x, static_cast<Coalition>(s),
                                                *options.background);
      for (std::size_t c = 0; c < nc; ++c) v[s][c] += e[c];
    }
    for (auto& val : v[s]) val /= static_cast<double>(model.trees.size());
  }
  return v;
}

// |S|! (p - |S| - 1)! / p! for |S| = 0..p-1.
std::vector<double> shapley_weights(std::size_t p) {
  std::vector<double> w(p);
  for (std::size_t s = 0; s < p; ++s) {
    // Multiply ratios to stay in range: s! (p-s-1)! / p! = 1 / (p * C(p-1, s)).
    double binom = 1.0;
    for (std::size_t i = 1; i <= s; ++i) binom = binom * static_cast<double>(p - 1 - s + i) / i;
    w[s] = 1.0 / (static_cast<double>(p) * binom);
  }
  return w;
}

void check_input(const RandomForestModel& model, std::span<const double> x, std::size_t limit,
                 const char* what) {
  if (x.size() != model.n_features()) throw DataError(std::string(what) + ": dimension mismatch");
  if (model.n_features() > limit)
    throw ConfigError(std::string(what) + ": exact enumeration refused for " +
                      std::to_string(model.n_features()) + " features (limit " +
                      std::to_string(limit) + ", cost grows as 2^p)");
  if (model.trees.empty()) throw DataError(std::string(what) + ": model has no trees");
}

}  // namespace

std::vector<double> tree_expectation(const DecisionTree& tree, std::span<const double> x,
                                     Coalition present) {
  std::vector<double> out(tree.n_classes, 0.0);
  expectation_walk(tree, 0, x, present, 1.0, out);
  return out;
}

std::vector<double> tree_expectation_interventional(const DecisionTree& tree,
                                                    std::span<const double> x,
                                                    Coalition present,
                                                    const Matrix& background) {
  std::vector<double> out(tree.n_classes, 0.0);
  std::vector<double> mixed(x.begin(), x.end());
  for (const auto& row : background) {
    for (std::size_t j = 0; j < mixed.size(); ++j)
      mixed[j] = (present & (Coalition{1} << j)) ? x[j] : row[j];
    leaf_distribution(tree.leaf_for(mixed), out, 1.0);
  }
  for (auto& v : out) v /= static_cast<double>(background.size());
  return out;
}

ShapExplanation shapley_values(const RandomForestModel& model, std::span<const double> x,
                               const ShapOptions& options) {
  check_input(model, x, kShapleyFeatureLimit, "shapley_values");
  const std::size_t p = model.n_features();
  const std::size_t nc = model.n_classes();
  const auto v = coalition_values(model, x, options);
  const auto w = shapley_weights(p);
  ShapExplanation out;
  out.base_value = v.front();
  out.prediction = v.back();
  out.contributions.assign(p, std::vector<double>(nc, 0.0));
  const std::size_t masks = std::size_t{1} << p;
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t s = 0; s < masks; ++s) {
      if (s & bit) continue;
      const double weight = w[static_cast<std::size_t>(std::popcount(s))];
      for (std::size_t c = 0; c < nc; ++c)
        out.contributions[i][c] += weight * (v[s | bit][c] - v[s][c]);
    }
  }
  return out;
}

InteractionMatrix interaction_values(const RandomForestModel& model, std::span<const double> x,
                                     const ShapOptions& options) {
  check_input(model, x, kInteractionFeatureLimit, "interaction_values");
  const std::size_t p = model.n_features();
  const std::size_t nc = model.n_classes();
  const auto v = coalition_values(model, x, options);
  const std::size_t masks = std::size_t{1} << p;

  // |S|! (p - |S| - 2)! / (2 (p - 1)!) = 1 / (2 (p - 1) C(p - 2, |S|)).
  std::vector<double> w(p >= 2 ? p - 1 : 0);
  for (std::size_t s = 0; s + 2 <= p; ++s) {
    double binom = 1.0;
    for (std::size_t i = 1; i <= s; ++i) binom = binom * static_cast<double>(p - 2 - s + i) / i;
    w[s] = 1.0 / (2.0 * static_cast<double>(p - 1) * binom);
  }

  InteractionMatrix out;
  out.values.assign(nc, std::vector<std::vector<double>>(p, std::vector<double>(p, 0.0)));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const std::size_t bi = std::size_t{1} << i;
      const std::size_t bj = std::size_t{1} << j;
      std::vector<double> acc(nc, 0.0);
      for (std::size_t s = 0; s < masks; ++s) {
        if (s & (bi | bj)) continue;
        const double weight = w[static_cast<std::size_t>(std::popcount(s))];
        for (std::size_t c = 0; c < nc; ++c)
          acc[c] += weight * (v[s | bi | bj][c] - v[s | bi][c] - v[s | bj][c] + v[s][c]);
      }
      for (std::size_t c = 0; c < nc; ++c) {
        out.values[c][i][j] = acc[c];
        out.values[c][j][i] = acc[c];
      }
    }
  }
  const auto phi = shapley_values(model, x, options);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < p; ++i) {
      double off = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        if (j != i) off += out.values[c][i][j];
      }
      out.values[c][i][i] = phi.contributions[i][c] - off;
    }
  }
  return out;
}

ShapSummary mean_abs_shap(const RandomForestModel& model, const Matrix& x,
                          const ShapOptions& options) {
  const std::size_t p = model.n_features();
  const std::size_t nc = model.n_classes();
  ShapSummary out;
  out.class_names = model.class_names;
  out.explanations.resize(x.size());
  parallel_for(x.size(), [&](std::size_t r) {
    out.explanations[r] = shapley_values(model, x[r], options);
  });
  std::vector<std::vector<double>> sums(nc, std::vector<double>(p, 0.0));
  for (const auto& e : out.explanations) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t c = 0; c < nc; ++c) sums[c][i] += std::abs(e.contributions[i][c]);
    }
  }
  auto ranked = [&](auto value_of) {
    std::vector<FeatureImportance> r;
    for (std::size_t i = 0; i < p; ++i) r.push_back({model.feature_names[i], value_of(i)});
    std::sort(r.begin(), r.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
      if (a.mean_abs != b.mean_abs) return a.mean_abs > b.mean_abs;
      return a.feature < b.feature;
    });
    return r;
  };
  const double n = x.empty() ? 1.0 : static_cast<double>(x.size());
  for (std::size_t c = 0; c < nc; ++c) {
    out.per_class.push_back(ranked([&](std::size_t i) { return sums[c][i] / n; }));
  }
  out.overall = ranked([&](std::size_t i) {
    double total = 0.0;
    for (std::size_t c = 0; c < nc; ++c) total += sums[c][i] / n;
    return total;
  });
  return out;
}

}  // namespace scrapsig
