#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scrapsig/ingest.h"

namespace scrapsig {

// Least-squares slope sum((x - mean_x)(y - mean_y)) / sum((x - mean_x)^2).
// Throws InsufficientDataError for fewer than 2 points and DataError when
// every x is equal.
double ols_slope(std::span<const double> xs, std::span<const double> ys);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;  // value at x = 0
  double at(double x) const { return intercept + slope * x; }
};

LineFit ols_fit(std::span<const double> xs, std::span<const double> ys);

double mean(std::span<const double> v);
// n - 1 denominator; 0 for a single value.
double sample_std(std::span<const double> v);

inline constexpr std::array<std::string_view, 8> kFeatureNames = {
    "avg_kg",     "avg_price",   "price_volatility",         "kg_trend",
    "price_trend", "volatility_x_price_trend", "log_avg_kg", "log_avg_price"};

inline constexpr std::array<std::string_view, 5> kPrimaryFeatureNames = {
    "avg_kg", "avg_price", "price_volatility", "kg_trend", "price_trend"};

std::vector<std::string> all_feature_names();
std::vector<std::string> primary_feature_names();
// "all" or "primary5".
std::vector<std::string> feature_set(std::string_view name);

struct FeatureVector {
  std::string hs_code;
  double avg_kg = 0.0;
  double avg_price = 0.0;
  double price_volatility = 0.0;
  double kg_trend = 0.0;
  double price_trend = 0.0;
  double volatility_x_price_trend = 0.0;
  double log_avg_kg = 0.0;
  double log_avg_price = 0.0;

  // Fitted-line intercepts at the first year and the index of the last year;
  // not model inputs, used for window-level relative changes.
  int first_year = 0;
  int span_years = 0;
  double kg_intercept = 0.0;
  double price_intercept = 0.0;

  double get(std::string_view name) const;
};

FeatureVector compute_features(const AnnualSeries& series);

// kg_trend > 0 and price_trend < 0, both strict.
bool signature_flag(const FeatureVector& fv);

struct NormalizedMatrix {
  std::vector<std::string> rows;  // hs codes
  std::vector<std::string> cols;  // feature names
  std::vector<std::vector<double>> values;
  std::vector<double> means;
  std::vector<double> stds;  // 1 for zero-variance columns

  std::size_t n_rows() const { return values.size(); }
  std::size_t n_cols() const { return cols.size(); }

  std::vector<double> transform(const FeatureVector& fv) const;
  std::vector<double> inverse(std::span<const double> z) const;
};

NormalizedMatrix zscore_normalize(const std::vector<FeatureVector>& vectors,
                                  const std::vector<std::string>& feature_subset);

// Raw (unnormalized) matrix in the given column order.
std::vector<std::vector<double>> feature_matrix(const std::vector<FeatureVector>& vectors,
                                                const std::vector<std::string>& features);

}  // namespace scrapsig
