#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scrapsig {

enum class Flow { kImport, kExport };

std::string_view to_string(Flow flow);
std::optional<Flow> parse_flow(std::string_view text);

struct TradeRecord {
  std::string hs_code;
  int year = 0;
  Flow flow = Flow::kImport;
  std::string reporter;
  std::string partner;
  double value_usd = 0.0;
  double mass_kg = 0.0;
};

// True iff `code` is 6 to 10 ASCII digits.
bool is_valid_hs_code(std::string_view code);

enum class PointOrigin { kObserved, kInterpolated };

struct SeriesPoint {
  int year = 0;
  double kg = 0.0;
  double usd = 0.0;
  std::optional<double> unit_price;  // absent when kg == 0
  PointOrigin origin = PointOrigin::kObserved;
  bool capped = false;
  // Pre-winsorization unit price, kept on capped points so re-capping
  // estimates percentiles from the original distribution.
  std::optional<double> uncapped_unit_price;

  static SeriesPoint make(int year, double kg, double usd,
                          PointOrigin origin = PointOrigin::kObserved);
};

struct AnnualSeries {
  std::string hs_code;
  std::vector<SeriesPoint> points;  // strictly increasing years

  const SeriesPoint* find(int year) const;
  std::vector<int> years() const;
};

using SeriesSet = std::vector<AnnualSeries>;

struct CleaningConfig {
  double max_missing_fraction = 0.20;
  int max_interp_gap = 1;
  double cap_lo = 0.01;
  double cap_hi = 0.99;
  bool cap_per_code = false;
  int base_year = 0;                  // 0: first year present in cpi_index
  std::map<int, double> cpi_index;    // empty: identity deflation

  void validate() const;
};

// Field name -> column header.
struct ColumnMapping {
  std::string hs_code = "hs_code";
  std::string year = "year";
  std::string flow = "flow";
  std::string reporter = "reporter";
  std::string partner = "partner";
  std::string value_usd = "value_usd";
  std::string mass_kg = "mass_kg";

  // Header names used by UN Comtrade bulk/API CSV exports.
  static ColumnMapping comtrade();
  static ColumnMapping preset(std::string_view name);
};

struct ParseOptions {
  char delimiter = ',';
  std::optional<int> min_year;
  std::optional<int> max_year;
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ParseResult {
  std::vector<TradeRecord> records;
  std::vector<RejectedRow> rejected;
};

// Splits one delimited line, honouring double-quoted fields ("" escapes).
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

// Throws ConfigError if a mapped column is missing from the header.
ParseResult parse_records(std::istream& in, const ColumnMapping& mapping,
                          const ParseOptions& options = {});

// Sums kg and USD per (hs_code, year) over records passing the filters.
// Output sorted by hs_code, points by year.
SeriesSet aggregate_annual(const std::vector<TradeRecord>& records,
                           std::optional<Flow> flow_filter = std::nullopt,
                           std::optional<std::string> reporter_filter = std::nullopt);

AnnualSeries interpolate_gaps(const AnnualSeries& series, const CleaningConfig& config);

struct DroppedCode {
  std::string hs_code;
  double missing_fraction = 0.0;
};

struct ExclusionResult {
  SeriesSet kept;
  std::vector<DroppedCode> dropped;
};

// Interpolated points count as present.
ExclusionResult exclude_sparse(const SeriesSet& series, int first_year, int last_year,
                               const CleaningConfig& config);

AnnualSeries adjust_inflation(const AnnualSeries& series, const CleaningConfig& config);

// Linear interpolation between closest order statistics (type 7).
// `sorted` must be ascending and non-empty.
double percentile_linear(const std::vector<double>& sorted, double q);

struct CapResult {
  SeriesSet series;
  std::size_t capped_points = 0;
  std::vector<std::string> warnings;
};

// Winsorizes unit prices at [cap_lo, cap_hi] percentiles, pooled across all
// codes unless config.cap_per_code.
CapResult cap_outliers(const SeriesSet& series, const CleaningConfig& config);

struct CleaningReport {
  std::size_t accepted_rows = 0;
  std::vector<RejectedRow> rejected;
  std::vector<DroppedCode> dropped;
  std::size_t interpolated_points = 0;
  std::size_t capped_points = 0;
  std::vector<std::string> warnings;
};

struct CleaningResult {
  SeriesSet series;
  CleaningReport report;
};

// interpolate -> exclude -> deflate -> cap, over [first_year, last_year].
CleaningResult clean_series(const SeriesSet& raw, int first_year, int last_year,
                            const CleaningConfig& config);

}  // namespace scrapsig
