#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scrapsig/features.h"
#include "scrapsig/ingest.h"
#include "scrapsig/segment.h"

namespace scrapsig {

struct SignatureThresholds {
  double price_decline = 0.10;  // cumulative fitted-line decline, fraction
  double volume_growth = 0.10;  // cumulative fitted-line growth, fraction
};

struct SignatureResult {
  std::string hs_code;
  bool signature = false;
  bool strong_signature = false;
  std::optional<double> price_change;   // relative, fitted-line endpoints
  std::optional<double> volume_change;
};

// Relative change of the fitted line between the first and last year;
// nullopt when the fitted start value is not positive.
std::optional<double> fitted_relative_change(double intercept, double slope, int span_years);

std::vector<SignatureResult> detect_signature_codes(const std::vector<FeatureVector>& features,
                                                    const SignatureThresholds& thresholds = {});

struct ForecastPoint {
  int year = 0;
  double kg = 0.0;
  double price = 0.0;
  bool kg_floor_clamped = false;     // projection at or below zero
  bool price_floor_clamped = false;
};

struct Forecast {
  std::string hs_code;
  int last_observed_year = 0;
  std::vector<ForecastPoint> points;  // last observed year .. horizon
};

Forecast forecast_linear(const AnnualSeries& series, int horizon_year = 2030);

enum class BaselY48 { kLikely, kPossible, kNo };

std::string_view to_string(BaselY48 v);
BaselY48 parse_basel_y48(std::string_view text);

struct BaselMatch {
  BaselY48 y48 = BaselY48::kNo;
  bool a3210 = false;
  std::string note = "unmapped";
};

class BaselTable {
 public:
  // Parses the CSV layout of data/basel_pic.csv ('#' lines are comments).
  static BaselTable parse(std::string_view csv);
  static BaselTable load(const std::string& path);
  // Copy of data/basel_pic.csv compiled into the library.
  static const BaselTable& bundled();

  // Longest-prefix match; unknown codes map to {no, false, "unmapped"}.
  BaselMatch lookup(std::string_view hs_code) const;
  const std::map<std::string, BaselMatch>& rows() const { return rows_; }

 private:
  std::map<std::string, BaselMatch> rows_;
};

BaselMatch basel_overlap(std::string_view hs_code, const BaselTable& table = BaselTable::bundled());

// Rates are held in millionths so band arithmetic on decimal inputs is exact.
struct RateBand {
  std::int64_t lo_micro = 0;
  std::int64_t hi_micro = 0;
  double lo() const { return static_cast<double>(lo_micro) / 1e6; }
  double hi() const { return static_cast<double>(hi_micro) / 1e6; }
};

class TariffTable {
 public:
  static TariffTable parse(std::string_view csv);
  static TariffTable load(const std::string& path);
  static const TariffTable& bundled();

  void set(const std::string& prefix, double lo, double hi);
  // Longest-prefix match; returns the matched prefix too.
  std::optional<std::pair<std::string, RateBand>> lookup(std::string_view hs_code) const;
  const std::map<std::string, RateBand>& rows() const { return rows_; }

 private:
  std::map<std::string, RateBand> rows_;
};

struct DutyGap {
  double lo = 0.0;
  double hi = 0.0;
};

// (rate(true) - rate(declared)) x value with interval arithmetic on bands.
// Codes resolving to the same tariff row give (0, 0). Throws ConfigError
// naming any unmapped code.
DutyGap duty_gap(std::string_view declared_code, std::string_view true_code,
                 double customs_value_usd, const TariffTable& table = TariffTable::bundled());

struct DilutionScenario {
  std::int64_t n_containers = 0;
  std::int64_t n_poisoned = 0;
  double kg_per_container = 0.0;
  double declared_price = 0.0;
  double scrap_price = 0.0;
};

struct DilutionResult {
  double total_kg = 0.0;
  double genuine_kg = 0.0;
  double poisoned_kg = 0.0;
  double declared_value = 0.0;
  double actual_value = 0.0;
  double blended_price = 0.0;
  double overstatement_usd = 0.0;
  double overstatement_fraction = 0.0;
};

DilutionResult dilution_model(const DilutionScenario& scenario);

struct BaselSummary {
  BaselY48 y48 = BaselY48::kNo;
  bool a3210 = false;
  std::string note;
};

struct WatchlistEntry {
  std::string hs_code;
  std::optional<Archetype> archetype;
  bool signature = false;
  bool strong_signature = false;
  std::vector<int> anomaly_years;
  std::vector<ForecastPoint> forecast;
  BaselSummary basel;
  DutyGap duty_gap_usd;
  std::string duty_note;
  int risk_rank = 0;
};

struct DutyContext {
  std::string true_code = "3915";
  // Declared customs value per code (USD); missing codes use 0.
  std::map<std::string, double> customs_value_usd;
};

struct WatchlistInputs {
  std::map<std::string, std::optional<Archetype>> segments;
  std::vector<SignatureResult> signatures;
  std::map<std::string, std::vector<int>> anomaly_years;
  std::map<std::string, Forecast> forecasts;
  DutyContext duty;
  const BaselTable* basel = nullptr;    // bundled when null
  const TariffTable* tariffs = nullptr; // bundled when null
};

// Lexicographic rank: signature, strong signature, anomaly count, high-risk
// archetype, upper duty gap (all descending), then hs_code ascending.
std::vector<WatchlistEntry> build_watchlist(const WatchlistInputs& inputs);

// Strict-weak order used by build_watchlist; true if a outranks b.
bool outranks(const WatchlistEntry& a, const WatchlistEntry& b);

}  // namespace scrapsig
