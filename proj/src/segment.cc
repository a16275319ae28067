#include "scrapsig/segment.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "scrapsig/error.h"
#include "scrapsig/parallel.h"
#include "scrapsig/random.h"

namespace scrapsig {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(centroids[c], x);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

namespace {

Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.size();
  Matrix centroids;
  centroids.push_back(x[rng.below(n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = 0;
    if (total <= 0.0) {
      // Every remaining point coincides with a centroid.
      pick = rng.below(n);
    } else {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
      while (d2[pick] <= 0.0 && pick > 0) --pick;
    }
    centroids.push_back(x[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(x[i], centroids.back()));
  }
  return centroids;
}

double assign_all(const Matrix& x, const Matrix& centroids, std::vector<std::size_t>& labels) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    labels[i] = nearest_centroid(centroids, x[i]);
    inertia += squared_distance(x[i], centroids[labels[i]]);
  }
  return inertia;
}

KMeansModel lloyd(const Matrix& x, std::size_t k, std::uint64_t seed, const KMeansOptions& opt) {
  Rng rng(seed);
  const std::size_t n = x.size();
  const std::size_t p = x[0].size();
  KMeansModel m;
  m.k = k;
  m.centroids = kmeans_plus_plus(x, k, rng);
  m.labels.assign(n, 0);
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    m.inertia_history.push_back(assign_all(x, m.centroids, m.labels));
    m.iterations_run = iter + 1;

    Matrix next(k, std::vector<double>(p, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[m.labels[i]];
      for (std::size_t j = 0; j < p; ++j) next[m.labels[i]][j] += x[i][j];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (auto& v : next[c]) v /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = squared_distance(x[i], m.centroids[m.labels[i]]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      taken[far] = true;
      next[c] = x[far];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift += squared_distance(next[c], m.centroids[c]);
    m.centroids = std::move(next);
    if (shift <= opt.tol) break;
  }
  m.inertia = assign_all(x, m.centroids, m.labels);
  m.inertia_history.push_back(m.inertia);
  return m;
}

}  // namespace

KMeansModel kmeans_fit(const Matrix& x, const KMeansOptions& options) {
  if (options.k < 1) throw ConfigError("k-means: k must be >= 1");
  if (x.size() < options.k)
    throw DataError("k-means infeasible: " + std::to_string(x.size()) + " rows < k = " +
                    std::to_string(options.k));
  if (options.n_init < 1) throw ConfigError("k-means: n_init must be >= 1");
  std::vector<KMeansModel> runs(static_cast<std::size_t>(options.n_init));
  parallel_for(runs.size(), [&](std::size_t r) {
    runs[r] = lloyd(x, options.k, derive_seed(options.seed, r), options);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  KMeansModel model = std::move(runs[best]);
  model.seed = options.seed;
  model.n_init = options.n_init;
  return model;
}

std::size_t assign(const KMeansModel& model, std::span<const double> x) {
  if (model.centroids.empty() || x.size() != model.centroids[0].size())
    throw DataError("assign: dimension mismatch");
  return nearest_centroid(model.centroids, x);
}

std::optional<std::size_t> max_curvature_k(
    const std::vector<std::pair<std::size_t, double>>& curve) {
  if (curve.size() < 3) return std::nullopt;
  std::optional<std::size_t> k;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double d2 = curve[i - 1].second - 2.0 * curve[i].second + curve[i + 1].second;
    if (d2 > best) {
      best = d2;
      k = curve[i].first;
    }
  }
  return k;
}

ElbowResult elbow_scan(const Matrix& x, std::size_t k_min, std::size_t k_max,
                       const KMeansOptions& base) {
  if (k_min < 1 || k_max < k_min) throw ConfigError("elbow: empty k range");
  if (k_max > x.size())
    throw DataError("elbow: k_max " + std::to_string(k_max) + " exceeds row count " +
                    std::to_string(x.size()));
  ElbowResult result;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    KMeansOptions opt = base;
    opt.k = k;
    result.curve.emplace_back(k, kmeans_fit(x, opt).inertia);
  }
  result.recommended_k = max_curvature_k(result.curve);
  if (!result.recommended_k)
    result.warnings.push_back("elbow: k range too short for a curvature estimate");
  return result;
}

std::string_view to_string(Archetype a) {
  switch (a) {
    case Archetype::kHighVolumeCommodity: return "HighVolumeCommodity";
    case Archetype::kEmergingCommodity: return "EmergingCommodity";
    case Archetype::kStableMidMarket: return "StableMidMarket";
    case Archetype::kHighPriceNiche: return "HighPriceNiche";
  }
  return "?";
}

Archetype parse_archetype(std::string_view name) {
  for (auto a : {Archetype::kHighVolumeCommodity, Archetype::kEmergingCommodity,
                 Archetype::kStableMidMarket, Archetype::kHighPriceNiche}) {
    if (to_string(a) == name) return a;
  }
  throw DataError("unknown archetype '" + std::string(name) + "'");
}

bool is_high_risk(Archetype a) {
  return a == Archetype::kHighVolumeCommodity || a == Archetype::kEmergingCommodity;
}

std::vector<CentroidProfile> centroid_profiles(const KMeansModel& model,
                                               const NormalizedMatrix& normalization) {
  auto column = [&](std::string_view name) {
    for (std::size_t j = 0; j < normalization.cols.size(); ++j) {
      if (normalization.cols[j] == name) return j;
    }
    throw ConfigError("archetype labeling needs feature '" + std::string(name) + "'");
  };
  const std::size_t c_price = column("avg_price");
  const std::size_t c_kg = column("avg_kg");
  const std::size_t c_trend = column("kg_trend");
  std::vector<CentroidProfile> out;
  for (const auto& c : model.centroids) {
    const auto raw = normalization.inverse(c);
    out.push_back({raw[c_price], raw[c_kg], raw[c_trend]});
  }
  return out;
}

namespace {

// Index of the maximum of key over `remaining`; ties keep the lowest id.
std::size_t pick_max(const std::vector<std::size_t>& remaining,
                     const std::vector<CentroidProfile>& profiles,
                     double CentroidProfile::*key, bool& tied) {
  std::size_t best = remaining.front();
  tied = false;
  for (std::size_t i = 1; i < remaining.size(); ++i) {
    const std::size_t c = remaining[i];
    if (profiles[c].*key > profiles[best].*key) {
      best = c;
      tied = false;
    } else if (profiles[c].*key == profiles[best].*key) {
      tied = true;
    }
  }
  return best;
}

}  // namespace

ArchetypeLabeling label_archetypes(const std::vector<CentroidProfile>& profiles) {
  if (profiles.size() != kArchetypeCount)
    throw ConfigError("archetype labels are defined only for k = 4, got k = " +
                      std::to_string(profiles.size()));
  ArchetypeLabeling out;
  out.by_cluster.assign(kArchetypeCount, Archetype::kStableMidMarket);
  out.rationale.assign(kArchetypeCount, "");
  std::vector<std::size_t> remaining = {0, 1, 2, 3};

  struct Rule {
    Archetype label;
    double CentroidProfile::*key;
    const char* what;
  };
  const Rule rules[] = {
      {Archetype::kHighPriceNiche, &CentroidProfile::avg_price, "highest avg_price"},
      {Archetype::kHighVolumeCommodity, &CentroidProfile::avg_kg, "highest avg_kg"},
      {Archetype::kEmergingCommodity, &CentroidProfile::kg_trend, "larger kg_trend"},
  };
  for (const auto& rule : rules) {
    bool tied = false;
    const std::size_t c = pick_max(remaining, profiles, rule.key, tied);
    std::ostringstream why;
    why.precision(6);
    why << rule.what << " among remaining clusters (" << profiles[c].*(rule.key) << ")";
    if (tied) why << "; tie broken by lowest cluster id";
    out.by_cluster[c] = rule.label;
    out.rationale[c] = why.str();
    remaining.erase(std::find(remaining.begin(), remaining.end(), c));
  }
  out.by_cluster[remaining.front()] = Archetype::kStableMidMarket;
  out.rationale[remaining.front()] = "remaining cluster";
  return out;
}

}  // namespace scrapsig
