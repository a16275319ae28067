#include "scrapsig/anomaly.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scrapsig/error.h"
#include "scrapsig/features.h"
#include "scrapsig/parallel.h"
#include "scrapsig/random.h"

namespace scrapsig {

double harmonic_approx(double i) { return std::log(i) + kEulerGamma; }

double average_path_length(std::size_t m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  const double md = static_cast<double>(m);
  return 2.0 * harmonic_approx(md - 1.0) - 2.0 * (md - 1.0) / md;
}

double IsolationTree::path_length(std::span<const double> x) const {
  int node = 0;
  int depth = 0;
  while (!nodes[node].is_leaf()) {
    const auto& n = nodes[node];
    node = x[n.feature] < n.split ? n.left : n.right;
    ++depth;
  }
  return depth + average_path_length(nodes[node].size);
}

int IsolationTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

namespace {

class IsolationTreeBuilder {
 public:
  IsolationTreeBuilder(const Matrix& x, int height_limit, Rng& rng)
      : x_(x), height_limit_(height_limit), rng_(rng) {}

  IsolationTree build(std::vector<std::size_t> rows) {
    IsolationTree tree;
    grow(tree, rows, 0);
    return tree;
  }

 private:
  int grow(IsolationTree& tree, std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[id].size = rows.size();
    if (depth >= height_limit_ || rows.size() <= 1) return id;

    const std::size_t dims = x_[rows[0]].size();
    std::vector<std::size_t> splittable;
    std::vector<std::pair<double, double>> range(dims);
    for (std::size_t f = 0; f < dims; ++f) {
      double lo = x_[rows[0]][f];
      double hi = lo;
      for (auto r : rows) {
        lo = std::min(lo, x_[r][f]);
        hi = std::max(hi, x_[r][f]);
      }
      range[f] = {lo, hi};
      if (lo < hi) splittable.push_back(f);
    }
    if (splittable.empty()) return id;

    const std::size_t f = splittable[rng_.below(splittable.size())];
    const auto [lo, hi] = range[f];
    double split = lo + rng_.uniform_open() * (hi - lo);
    if (!(split > lo && split < hi)) split = lo + 0.5 * (hi - lo);
    if (!(split > lo && split < hi)) split = hi;  // adjacent doubles: lo < split = hi

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][f] < split ? left : right).push_back(r);
    tree.nodes[id].feature = static_cast<int>(f);
    tree.nodes[id].split = split;
    const int l = grow(tree, left, depth + 1);
    const int rr = grow(tree, right, depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = rr;
    return id;
  }

  const Matrix& x_;
  int height_limit_;
  Rng& rng_;
};

}  // namespace

IsolationForestModel iforest_fit(const Matrix& points, const IsolationForestOptions& options) {
  if (points.size() < 2) throw InsufficientDataError("isolation forest needs >= 2 points");
  if (options.n_trees < 1) throw ConfigError("isolation forest needs >= 1 tree");
  if (options.psi < 2) throw ConfigError("isolation forest subsample size must be >= 2");
  const std::size_t dims = points[0].size();
  for (const auto& row : points) {
    if (row.size() != dims) throw DataError("isolation forest: ragged input matrix");
  }
  IsolationForestModel model;
  model.n_trees = options.n_trees;
  model.psi = std::min(options.psi, points.size());
  model.height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(model.psi))));
  model.dims = dims;
  model.seed = options.seed;
  model.trees.resize(options.n_trees);
  parallel_for(options.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(options.seed, t));
    std::vector<std::size_t> all(points.size());
    std::iota(all.begin(), all.end(), 0);
    // Partial Fisher-Yates: first psi entries are a uniform sample without replacement.
    for (std::size_t i = 0; i < model.psi; ++i) {
      const std::size_t j = i + rng.below(all.size() - i);
      std::swap(all[i], all[j]);
    }
    all.resize(model.psi);
    IsolationTreeBuilder builder(points, model.height_limit, rng);
    model.trees[t] = builder.build(std::move(all));
  });
  return model;
}

double mean_path_length(const IsolationForestModel& model, std::span<const double> x) {
  if (x.size() != model.dims) throw DataError("anomaly_score: dimension mismatch");
  double total = 0.0;
  for (const auto& tree : model.trees) total += tree.path_length(x);
  return total / static_cast<double>(model.trees.size());
}

double score_from_path(double mean_path, std::size_t psi) {
  return std::exp2(-mean_path / average_path_length(psi));
}

double anomaly_score(const IsolationForestModel& model, std::span<const double> x) {
  return score_from_path(mean_path_length(model, x), model.psi);
}

std::string_view to_string(AnomalyMode mode) {
  return mode == AnomalyMode::kPerCode ? "per-code" : "pooled";
}

AnomalyMode parse_anomaly_mode(std::string_view name) {
  if (name == "per-code" || name == "per_code") return AnomalyMode::kPerCode;
  if (name == "pooled") return AnomalyMode::kPooled;
  throw ConfigError("unknown anomaly mode '" + std::string(name) + "'");
}

namespace {

std::vector<double> standardized_kg(const AnnualSeries& s) {
  std::vector<double> kg;
  for (const auto& p : s.points) kg.push_back(p.kg);
  const double m = mean(kg);
  const double sd = sample_std(kg);
  for (auto& v : kg) v = sd > 0.0 ? (v - m) / sd : 0.0;
  return kg;
}

}  // namespace

AnomalyResult flag_year_anomalies(const SeriesSet& series, const AnomalyOptions& options) {
  AnomalyResult result;
  std::vector<const AnnualSeries*> usable;
  for (const auto& s : series) {
    if (s.points.size() < 3) {
      result.warnings.push_back("hs_code " + s.hs_code + ": fewer than 3 points, skipped");
      continue;
    }
    usable.push_back(&s);
  }
  auto emit = [&](const AnnualSeries& s, std::size_t i, double score) {
    AnomalyFlag f;
    f.hs_code = s.hs_code;
    f.year = s.points[i].year;
    f.observed_kg = s.points[i].kg;
    f.score = score;
    f.threshold_used = options.threshold;
    f.is_anomaly = score >= options.threshold;
    result.flags.push_back(std::move(f));
  };

  if (options.mode == AnomalyMode::kPerCode) {
    for (std::size_t c = 0; c < usable.size(); ++c) {
      const auto& s = *usable[c];
      const auto z = standardized_kg(s);
      Matrix pts;
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        pts.push_back({static_cast<double>(s.points[i].year - s.points[0].year), z[i]});
      }
      IsolationForestOptions opt{options.n_trees, options.psi, derive_seed(options.seed, c)};
      const auto model = iforest_fit(pts, opt);
      for (std::size_t i = 0; i < pts.size(); ++i) emit(s, i, anomaly_score(model, pts[i]));
    }
    return result;
  }

  Matrix pts;
  for (const auto* s : usable) {
    const auto z = standardized_kg(*s);
    double m = 0.0;
    for (const auto& p : s->points) m += p.kg;
    m /= static_cast<double>(s->points.size());
    for (std::size_t i = 0; i < s->points.size(); ++i) {
      pts.push_back({z[i], m > 0.0 ? s->points[i].kg / m : 0.0});
    }
  }
  if (pts.size() < 2) return result;
  const auto model = iforest_fit(pts, {options.n_trees, options.psi, options.seed});
  std::size_t row = 0;
  for (const auto* s : usable) {
    for (std::size_t i = 0; i < s->points.size(); ++i, ++row) {
      emit(*s, i, anomaly_score(model, pts[row]));
    }
  }
  return result;
}

}  // namespace scrapsig
