#include "scrapsig/trees.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "scrapsig/error.h"
#include "scrapsig/parallel.h"
#include "scrapsig/random.h"

namespace scrapsig {

double gini(std::span<const double> class_counts) {
  double total = 0.0;
  for (double c : class_counts) total += c;
  if (!(total > 0.0)) throw DataError("gini: class counts sum to zero");
  double sum_sq = 0.0;
  for (double c : class_counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

namespace {

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

constexpr double kGainTieEpsilon = 1e-12;

class CartBuilder {
 public:
  CartBuilder(const Matrix& x, const std::vector<std::size_t>& y, std::size_t n_classes,
              const TreeOptions& options)
      : x_(x), y_(y), n_classes_(n_classes), options_(options), rng_(options.seed) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    tree.n_features = x_[0].size();
    tree.n_classes = n_classes_;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -std::numeric_limits<double>::infinity();
  };

  std::vector<double> counts_of(const std::vector<std::size_t>& rows) const {
    std::vector<double> counts(n_classes_, 0.0);
    for (auto r : rows) counts[y_[r]] += 1.0;
    return counts;
  }

  std::vector<std::size_t> candidate_features(const std::vector<std::size_t>& rows) {
    const std::size_t p = x_[0].size();
    auto varies = [&](std::size_t f) {
      const double first = x_[rows[0]][f];
      return std::any_of(rows.begin(), rows.end(),
                         [&](std::size_t r) { return x_[r][f] != first; });
    };
    std::vector<std::size_t> chosen;
    if (!options_.features_per_split || *options_.features_per_split >= p) {
      for (std::size_t f = 0; f < p; ++f) {
        if (varies(f)) chosen.push_back(f);
      }
      return chosen;
    }
    // Visit features in random order; constant ones do not count toward the quota.
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);
    for (auto f : order) {
      if (chosen.size() == *options_.features_per_split) break;
      if (varies(f)) chosen.push_back(f);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  Split best_split(const std::vector<std::size_t>& rows, double parent_gini) {
    Split best;
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> sorted = rows;
    for (auto f : candidate_features(rows)) {
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return x_[a][f] < x_[b][f];
      });
      std::vector<double> left(n_classes_, 0.0);
      std::vector<double> right = counts_of(sorted);
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t r = sorted[i];
        left[y_[r]] += 1.0;
        right[y_[r]] -= 1.0;
        const double a = x_[r][f];
        const double b = x_[sorted[i + 1]][f];
        if (a == b) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = n - nl;
        const double gain = parent_gini - (nl / n) * gini(left) - (nr / n) * gini(right);
        if (gain > best.gain + kGainTieEpsilon) {
          double mid = a + (b - a) / 2.0;
          if (!(mid >= a && mid < b)) mid = a;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  int grow(DecisionTree& tree, const std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    {
      auto& node = tree.nodes[id];
      node.class_counts = counts_of(rows);
      node.n_samples = rows.size();
      node.gini = gini(node.class_counts);
      node.predicted_class = argmax_lowest(node.class_counts);
    }
    const double parent_gini = tree.nodes[id].gini;
    if (parent_gini <= 0.0) return id;
    if (options_.max_depth && depth >= *options_.max_depth) return id;
    if (rows.size() < std::max<std::size_t>(options_.min_samples_split, 2)) return id;

    const Split split = best_split(rows, parent_gini);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][split.feature] <= split.threshold ? left : right).push_back(r);
    tree.nodes[id].feature = split.feature;
    tree.nodes[id].threshold = split.threshold;
    const int l = grow(tree, left, depth + 1);
    const int rr = grow(tree, right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = rr;
    return id;
  }

  const Matrix& x_;
  const std::vector<std::size_t>& y_;
  std::size_t n_classes_;
  TreeOptions options_;
  Rng rng_;
};

void check_training_data(const Matrix& x, const std::vector<std::size_t>& y,
                         std::size_t n_classes) {
  if (x.empty() || y.empty()) throw DataError("tree_fit: empty training data");
  if (x.size() != y.size()) throw DataError("tree_fit: X and y lengths differ");
  if (x[0].empty()) throw DataError("tree_fit: no features");
  for (const auto& row : x) {
    if (row.size() != x[0].size()) throw DataError("tree_fit: ragged feature matrix");
  }
  for (auto label : y) {
    if (label >= n_classes) throw DataError("tree_fit: class id out of range");
  }
}

}  // namespace

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  if (x.size() != n_features) throw DataError("predict: dimension mismatch");
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const auto& n = nodes[node];
    node = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes[node];
}

std::size_t DecisionTree::predict(std::span<const double> x) const {
  return leaf_for(x).predicted_class;
}

std::vector<double> DecisionTree::predict_proba(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  std::vector<double> p(leaf.class_counts.size());
  const double n = static_cast<double>(leaf.n_samples);
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = leaf.class_counts[c] / n;
  return p;
}

std::vector<std::size_t> DecisionTree::used_features() const {
  std::vector<std::size_t> out;
  for (const auto& n : nodes) {
    if (!n.is_leaf()) out.push_back(static_cast<std::size_t>(n.feature));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DecisionTree tree_fit_rows(const Matrix& x, const std::vector<std::size_t>& y,
                           std::size_t n_classes, std::vector<std::size_t> rows,
                           const TreeOptions& options) {
  check_training_data(x, y, n_classes);
  if (rows.empty()) throw DataError("tree_fit: empty row sample");
  CartBuilder builder(x, y, n_classes, options);
  return builder.build(std::move(rows));
}

DecisionTree tree_fit(const Matrix& x, const std::vector<std::size_t>& y,
                      std::size_t n_classes, const TreeOptions& options) {
  check_training_data(x, y, n_classes);
  std::vector<std::size_t> rows(x.size());
  std::iota(rows.begin(), rows.end(), 0);
  return tree_fit_rows(x, y, n_classes, std::move(rows), options);
}

RandomForestModel forest_fit(const Matrix& x, const std::vector<std::size_t>& y,
                             std::vector<std::string> feature_names,
                             std::vector<std::string> class_names,
                             const ForestOptions& options) {
  if (x.size() < 2) throw InsufficientDataError("forest_fit: need >= 2 rows");
  check_training_data(x, y, class_names.size());
  if (feature_names.size() != x[0].size())
    throw DataError("forest_fit: feature name count does not match matrix width");
  if (options.n_trees < 1) throw ConfigError("forest_fit: n_trees must be >= 1");

  RandomForestModel model;
  model.feature_names = std::move(feature_names);
  model.class_names = std::move(class_names);
  model.options = options;
  const std::size_t p = x[0].size();
  std::optional<std::size_t> per_split;
  if (!options.features_per_split) {
    per_split = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  } else if (*options.features_per_split > 0) {
    per_split = *options.features_per_split;
  }
  model.trees.resize(options.n_trees);
  model.tree_seeds.resize(options.n_trees);
  for (std::size_t t = 0; t < options.n_trees; ++t)
    model.tree_seeds[t] = derive_seed(options.seed, t);

  parallel_for(options.n_trees, [&](std::size_t t) {
    std::vector<std::size_t> rows(x.size());
    if (options.bootstrap) {
      Rng rng(derive_seed(model.tree_seeds[t], 0));
      for (auto& r : rows) r = rng.below(x.size());
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeOptions topt;
    topt.max_depth = options.max_depth;
    topt.min_samples_split = options.min_samples_split;
    topt.features_per_split = per_split;
    topt.seed = derive_seed(model.tree_seeds[t], 1);
    model.trees[t] = tree_fit_rows(x, y, model.class_names.size(), std::move(rows), topt);
  });
  return model;
}

std::size_t predict(const RandomForestModel& model, std::span<const double> x) {
  std::vector<double> votes(model.n_classes(), 0.0);
  for (const auto& tree : model.trees) votes[tree.predict(x)] += 1.0;
  return argmax_lowest(votes);
}

std::vector<double> predict_proba(const RandomForestModel& model, std::span<const double> x) {
  std::vector<double> p(model.n_classes(), 0.0);
  for (const auto& tree : model.trees) {
    const auto tp = tree.predict_proba(x);
    for (std::size_t c = 0; c < p.size(); ++c) p[c] += tp[c];
  }
  for (auto& v : p) v /= static_cast<double>(model.trees.size());
  return p;
}

namespace {

std::map<std::size_t, std::vector<std::size_t>> indices_by_class(
    const std::vector<std::size_t>& y) {
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  return by_class;
}

}  // namespace

std::vector<Fold> stratified_kfold(const std::vector<std::size_t>& y, std::size_t k,
                                   std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");
  auto by_class = indices_by_class(y);
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < k)
      throw DataError("stratification infeasible: class " + std::to_string(label) + " has " +
                      std::to_string(idx.size()) + " members, fewer than k = " +
                      std::to_string(k));
  }
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> test(k);
  std::size_t offset = 0;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) test[(offset + i) % k].push_back(idx[i]);
    offset = (offset + idx.size()) % k;
  }
  for (auto& t : test) std::sort(t.begin(), t.end());
  std::vector<Fold> folds;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) train.insert(train.end(), test[g].begin(), test[g].end());
    }
    std::sort(train.begin(), train.end());
    folds.emplace_back(std::move(train), test[f]);
  }
  return folds;
}

Fold stratified_holdout(const std::vector<std::size_t>& y, double test_fraction,
                        std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("holdout fraction must lie in (0, 1)");
  auto by_class = indices_by_class(y);
  Rng rng(seed);
  Fold fold;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2)
      throw DataError("stratification infeasible: class " + std::to_string(label) +
                      " has fewer than 2 members");
    rng.shuffle(idx);
    auto n_test = static_cast<std::size_t>(std::lround(test_fraction * idx.size()));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    fold.second.insert(fold.second.end(), idx.begin(), idx.begin() + n_test);
    fold.first.insert(fold.first.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(fold.first.begin(), fold.first.end());
  std::sort(fold.second.begin(), fold.second.end());
  return fold;
}

double accuracy(const ConfusionMatrix& cm) {
  std::size_t trace = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < cm.size(); ++i) {
    trace += cm[i][i];
    for (auto v : cm[i]) total += v;
  }
  return total == 0 ? 0.0 : static_cast<double>(trace) / static_cast<double>(total);
}

std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& cm) {
  const std::size_t c = cm.size();
  std::vector<ClassMetrics> out(c);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t tp = cm[k][k];
    std::size_t actual = 0;
    std::size_t predicted = 0;
    for (std::size_t j = 0; j < c; ++j) {
      actual += cm[k][j];
      predicted += cm[j][k];
    }
    auto& m = out[k];
    m.support = actual;
    m.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / predicted;
    m.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / actual;
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return out;
}

namespace {

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  for (double x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

ConfusionMatrix zeros(std::size_t n) {
  return ConfusionMatrix(n, std::vector<std::size_t>(n, 0));
}

}  // namespace

CVReport evaluate(const Matrix& x, const std::vector<std::size_t>& y,
                  const std::vector<std::string>& feature_names,
                  const std::vector<std::string>& class_names, const EvaluateOptions& options,
                  const std::vector<std::string>& high_risk_classes) {
  if (x.size() != y.size()) throw DataError("evaluate: X and y lengths differ");
  CVReport report;
  report.class_names = class_names;
  report.seed = options.seed;
  report.holdout = options.holdout;
  const std::size_t nc = class_names.size();
  for (const auto& name : class_names) {
    bool high = std::find(high_risk_classes.begin(), high_risk_classes.end(), name) !=
                high_risk_classes.end();
    if (!high && high_risk_classes.empty()) {
      try {
        high = is_high_risk(parse_archetype(name));
      } catch (const DataError&) {
        high = false;
      }
    }
    report.class_is_high_risk.push_back(high);
  }

  std::vector<Fold> folds;
  if (options.holdout) {
    folds.push_back(stratified_holdout(y, options.holdout_fraction, options.seed));
  } else {
    folds = stratified_kfold(y, options.folds, options.seed);
  }
  report.k = folds.size();
  report.total_confusion = zeros(nc);

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& [train, test] = folds[f];
    Matrix xt;
    std::vector<std::size_t> yt;
    for (auto i : train) {
      xt.push_back(x[i]);
      yt.push_back(y[i]);
    }
    ForestOptions fopt = options.forest;
    fopt.seed = derive_seed(options.seed, 1000 + f);
    const auto model = forest_fit(xt, yt, feature_names, class_names, fopt);
    FoldResult fr;
    fr.confusion = zeros(nc);
    fr.binary_confusion = zeros(2);
    for (auto i : test) {
      const std::size_t pred = predict(model, x[i]);
      ++fr.confusion[y[i]][pred];
      ++report.total_confusion[y[i]][pred];
      const std::size_t actual_risk = report.class_is_high_risk[y[i]] ? 0 : 1;
      const std::size_t pred_risk = report.class_is_high_risk[pred] ? 0 : 1;
      ++fr.binary_confusion[actual_risk][pred_risk];
    }
    fr.accuracy = accuracy(fr.confusion);
    fr.per_class = class_metrics(fr.confusion);
    fr.binary_accuracy = accuracy(fr.binary_confusion);
    fr.binary = class_metrics(fr.binary_confusion);
    report.folds.push_back(std::move(fr));
  }

  auto collect = [&](auto getter) {
    std::vector<double> v;
    for (const auto& fr : report.folds) v.push_back(getter(fr));
    return mean_std(v);
  };
  report.accuracy = collect([](const FoldResult& fr) { return fr.accuracy; });
  report.binary_accuracy = collect([](const FoldResult& fr) { return fr.binary_accuracy; });
  for (std::size_t c = 0; c < nc; ++c) {
    report.precision.push_back(collect([c](const FoldResult& fr) { return fr.per_class[c].precision; }));
    report.recall.push_back(collect([c](const FoldResult& fr) { return fr.per_class[c].recall; }));
    report.f1.push_back(collect([c](const FoldResult& fr) { return fr.per_class[c].f1; }));
  }
  for (std::size_t c = 0; c < 2; ++c) {
    report.binary_precision.push_back(collect([c](const FoldResult& fr) { return fr.binary[c].precision; }));
    report.binary_recall.push_back(collect([c](const FoldResult& fr) { return fr.binary[c].recall; }));
    report.binary_f1.push_back(collect([c](const FoldResult& fr) { return fr.binary[c].f1; }));
  }
  return report;
}

std::string format_cv_table(const CVReport& report) {
  std::ostringstream out;
  out << std::fixed;
  auto ms = [](const MeanStd& m) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << m.mean << " \xC2\xB1 " << m.std;
    return s.str();
  };
  if (report.holdout) {
    out << "Stratified holdout evaluation (seed " << report.seed << ")\n";
  } else {
    out << "Stratified " << report.k << "-fold cross-validation (seed " << report.seed << ")\n";
  }
  out << std::left << std::setw(12) << "Metric" << std::setw(22) << "High-Risk Segment"
      << "Low-Risk Segment\n";
  {
    std::ostringstream acc;
    acc << std::fixed << std::setprecision(2) << report.accuracy.mean * 100.0 << " % \xC2\xB1 "
        << report.accuracy.std * 100.0 << " %";
    out << std::setw(12) << "Accuracy" << acc.str() << "\n";
  }
  const std::pair<const char*, const std::vector<MeanStd>*> rows[] = {
      {"Precision", &report.binary_precision},
      {"Recall", &report.binary_recall},
      {"F1-Score", &report.binary_f1}};
  for (const auto& [name, values] : rows) {
    // setw counts bytes; the +/- sign is two bytes in UTF-8.
    out << std::setw(12) << name << std::setw(23) << ms((*values)[0]) << ms((*values)[1])
        << "\n";
  }
  out << "\nPer-segment metrics\n";
  out << std::setw(22) << "Segment" << std::setw(17) << "Precision" << std::setw(17) << "Recall"
      << "F1-Score\n";
  for (std::size_t c = 0; c < report.class_names.size(); ++c) {
    out << std::setw(22) << report.class_names[c] << std::setw(18) << ms(report.precision[c])
        << std::setw(18) << ms(report.recall[c]) << ms(report.f1[c]) << "\n";
  }
  return out.str();
}

}  // namespace scrapsig
