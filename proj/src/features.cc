#include "scrapsig/features.h"

#include <cmath>
#include <numeric>

#include "scrapsig/error.h"

namespace scrapsig {

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

LineFit ols_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("ols: x and y lengths differ");
  if (xs.size() < 2) throw InsufficientDataError("ols: need at least 2 points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx == 0.0) throw DataError("ols: slope undefined, all x values are equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

double ols_slope(std::span<const double> xs, std::span<const double> ys) {
  return ols_fit(xs, ys).slope;
}

std::vector<std::string> all_feature_names() {
  return {kFeatureNames.begin(), kFeatureNames.end()};
}

std::vector<std::string> primary_feature_names() {
  return {kPrimaryFeatureNames.begin(), kPrimaryFeatureNames.end()};
}

std::vector<std::string> feature_set(std::string_view name) {
  if (name == "all" || name == "full8" || name.empty()) return all_feature_names();
  if (name == "primary5") return primary_feature_names();
  throw ConfigError("unknown feature set '" + std::string(name) +
                    "' (expected full8 or primary5)");
}

double FeatureVector::get(std::string_view name) const {
  if (name == "avg_kg") return avg_kg;
  if (name == "avg_price") return avg_price;
  if (name == "price_volatility") return price_volatility;
  if (name == "kg_trend") return kg_trend;
  if (name == "price_trend") return price_trend;
  if (name == "volatility_x_price_trend") return volatility_x_price_trend;
  if (name == "log_avg_kg") return log_avg_kg;
  if (name == "log_avg_price") return log_avg_price;
  throw ConfigError("unknown feature '" + std::string(name) + "'");
}

FeatureVector compute_features(const AnnualSeries& series) {
  std::vector<double> kg_x, kg_y, price_x, price_y;
  if (series.points.empty())
    throw InsufficientDataError("hs_code " + series.hs_code + ": empty series");
  const int first_year = series.points.front().year;
  for (const auto& p : series.points) {
    const double t = p.year - first_year;
    kg_x.push_back(t);
    kg_y.push_back(p.kg);
    if (p.unit_price) {
      price_x.push_back(t);
      price_y.push_back(*p.unit_price);
    }
  }
  if (price_y.size() < 2)
    throw InsufficientDataError("hs_code " + series.hs_code +
                                ": fewer than 2 points with a defined unit price");
  FeatureVector fv;
  fv.hs_code = series.hs_code;
  fv.first_year = first_year;
  fv.span_years = series.points.back().year - first_year;
  fv.avg_kg = mean(kg_y);
  fv.avg_price = mean(price_y);
  fv.price_volatility = sample_std(price_y);
  const auto kg_fit = ols_fit(kg_x, kg_y);
  const auto price_fit = ols_fit(price_x, price_y);
  fv.kg_trend = kg_fit.slope;
  fv.kg_intercept = kg_fit.intercept;
  fv.price_trend = price_fit.slope;
  fv.price_intercept = price_fit.intercept;
  fv.volatility_x_price_trend = fv.price_volatility * fv.price_trend;
  fv.log_avg_kg = std::log1p(fv.avg_kg);
  fv.log_avg_price = std::log1p(fv.avg_price);
  return fv;
}

bool signature_flag(const FeatureVector& fv) {
  return fv.kg_trend > 0.0 && fv.price_trend < 0.0;
}

std::vector<std::vector<double>> feature_matrix(const std::vector<FeatureVector>& vectors,
                                                const std::vector<std::string>& features) {
  std::vector<std::vector<double>> out;
  out.reserve(vectors.size());
  for (const auto& fv : vectors) {
    std::vector<double> row;
    row.reserve(features.size());
    for (const auto& f : features) row.push_back(fv.get(f));
    out.push_back(std::move(row));
  }
  return out;
}

NormalizedMatrix zscore_normalize(const std::vector<FeatureVector>& vectors,
                                  const std::vector<std::string>& feature_subset) {
  if (feature_subset.empty()) throw ConfigError("feature subset is empty");
  if (vectors.size() < 2) throw InsufficientDataError("normalization needs >= 2 vectors");
  NormalizedMatrix m;
  m.cols = feature_subset;
  for (const auto& fv : vectors) m.rows.push_back(fv.hs_code);
  m.values = feature_matrix(vectors, feature_subset);
  const std::size_t p = feature_subset.size();
  m.means.assign(p, 0.0);
  m.stds.assign(p, 1.0);
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> col;
    col.reserve(m.values.size());
    for (const auto& row : m.values) col.push_back(row[j]);
    m.means[j] = mean(col);
    const double sd = sample_std(col);
    m.stds[j] = sd > 0.0 ? sd : 1.0;
    for (auto& row : m.values) row[j] = sd > 0.0 ? (row[j] - m.means[j]) / sd : 0.0;
  }
  return m;
}

std::vector<double> NormalizedMatrix::transform(const FeatureVector& fv) const {
  std::vector<double> z(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) z[j] = (fv.get(cols[j]) - means[j]) / stds[j];
  return z;
}

std::vector<double> NormalizedMatrix::inverse(std::span<const double> z) const {
  if (z.size() != cols.size()) throw DataError("inverse: dimension mismatch");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stds[j] + means[j];
  return x;
}

}  // namespace scrapsig
