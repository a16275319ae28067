#include "scrapsig/ingest.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <tuple>

#include "scrapsig/error.h"

namespace scrapsig {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> parse_decimal(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<int> parse_int(std::string_view text) {
  const std::string s = trim(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<double> price_of(double kg, double usd) {
  if (kg > 0.0) return usd / kg;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Flow flow) {
  return flow == Flow::kImport ? "import" : "export";
}

std::optional<Flow> parse_flow(std::string_view text) {
  const std::string s = lower(trim(text));
  if (s == "import" || s == "m" || s == "imports") return Flow::kImport;
  if (s == "export" || s == "x" || s == "exports") return Flow::kExport;
  return std::nullopt;
}

bool is_valid_hs_code(std::string_view code) {
  if (code.size() < 6 || code.size() > 10) return false;
  return std::all_of(code.begin(), code.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

SeriesPoint SeriesPoint::make(int year, double kg, double usd, PointOrigin origin) {
  SeriesPoint p;
  p.year = year;
  p.kg = kg;
  p.usd = usd;
  p.unit_price = price_of(kg, usd);
  p.origin = origin;
  return p;
}

const SeriesPoint* AnnualSeries::find(int year) const {
  auto it = std::lower_bound(points.begin(), points.end(), year,
                             [](const SeriesPoint& p, int y) { return p.year < y; });
  if (it != points.end() && it->year == year) return &*it;
  return nullptr;
}

std::vector<int> AnnualSeries::years() const {
  std::vector<int> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.year);
  return out;
}

void CleaningConfig::validate() const {
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction <= 1.0))
    throw ConfigError("max_missing_fraction must lie in [0, 1]");
  if (max_interp_gap < 0) throw ConfigError("max_interp_gap must be >= 0");
  if (!(cap_lo >= 0.0 && cap_hi <= 1.0 && cap_lo < cap_hi))
    throw ConfigError("capping percentiles must satisfy 0 <= cap_lo < cap_hi <= 1");
  for (const auto& [year, deflator] : cpi_index) {
    if (!(deflator > 0.0))
      throw ConfigError("deflator for " + std::to_string(year) + " must be > 0");
  }
}

ColumnMapping ColumnMapping::comtrade() {
  ColumnMapping m;
  m.hs_code = "cmdCode";
  m.year = "refYear";
  m.flow = "flowCode";
  m.reporter = "reporterISO";
  m.partner = "partnerISO";
  m.value_usd = "primaryValue";
  m.mass_kg = "netWgt";
  return m;
}

ColumnMapping ColumnMapping::preset(std::string_view name) {
  if (name == "comtrade") return comtrade();
  if (name == "default" || name.empty()) return {};
  throw ConfigError("unknown column preset '" + std::string(name) + "'");
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

ParseResult parse_records(std::istream& in, const ColumnMapping& mapping,
                          const ParseOptions& options) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  // Leading '#' lines carry run metadata and are skipped.
  do {
    if (!std::getline(in, line)) throw ConfigError("input has no header row");
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  } while (!line.empty() && line[0] == '#');

  const auto header = split_delimited(line, options.delimiter);
  auto column = [&](const std::string& name, const char* field) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw ConfigError("mapped column '" + name + "' for field " + field +
                      " not found in header");
  };
  const std::size_t c_code = column(mapping.hs_code, "hs_code");
  const std::size_t c_year = column(mapping.year, "year");
  const std::size_t c_flow = column(mapping.flow, "flow");
  const std::size_t c_reporter = column(mapping.reporter, "reporter");
  const std::size_t c_partner = column(mapping.partner, "partner");
  const std::size_t c_value = column(mapping.value_usd, "value_usd");
  const std::size_t c_mass = column(mapping.mass_kg, "mass_kg");
  const std::size_t needed =
      1 + std::max({c_code, c_year, c_flow, c_reporter, c_partner, c_value, c_mass});

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || line[0] == '#') continue;
    auto reject = [&](std::string reason) {
      result.rejected.push_back({line_no, std::move(reason)});
    };
    const auto cells = split_delimited(line, options.delimiter);
    if (cells.size() < needed) {
      reject("expected at least " + std::to_string(needed) + " fields, found " +
             std::to_string(cells.size()));
      continue;
    }
    TradeRecord r;
    r.hs_code = trim(cells[c_code]);
    if (!is_valid_hs_code(r.hs_code)) {
      reject("invalid hs_code '" + r.hs_code + "'");
      continue;
    }
    const auto year = parse_int(cells[c_year]);
    if (!year) {
      reject("malformed year '" + cells[c_year] + "'");
      continue;
    }
    r.year = *year;
    if ((options.min_year && r.year < *options.min_year) ||
        (options.max_year && r.year > *options.max_year)) {
      reject("year " + std::to_string(r.year) + " outside analysis window");
      continue;
    }
    const auto flow = parse_flow(cells[c_flow]);
    if (!flow) {
      reject("unknown flow '" + cells[c_flow] + "'");
      continue;
    }
    r.flow = *flow;
    r.reporter = trim(cells[c_reporter]);
    r.partner = trim(cells[c_partner]);
    const auto value = parse_decimal(cells[c_value]);
    if (!value || *value < 0.0) {
      reject("malformed value_usd '" + cells[c_value] + "'");
      continue;
    }
    const auto mass = parse_decimal(cells[c_mass]);
    if (!mass || *mass < 0.0) {
      reject("malformed mass_kg '" + cells[c_mass] + "'");
      continue;
    }
    r.value_usd = *value;
    r.mass_kg = *mass;
    result.records.push_back(std::move(r));
  }
  return result;
}

SeriesSet aggregate_annual(const std::vector<TradeRecord>& records,
                           std::optional<Flow> flow_filter,
                           std::optional<std::string> reporter_filter) {
  std::map<std::string, std::map<int, std::pair<double, double>>> sums;
  for (const auto& r : records) {
    if (flow_filter && r.flow != *flow_filter) continue;
    if (reporter_filter && r.reporter != *reporter_filter) continue;
    auto& cell = sums[r.hs_code][r.year];
    cell.first += r.mass_kg;
    cell.second += r.value_usd;
  }
  SeriesSet out;
  out.reserve(sums.size());
  for (const auto& [code, years] : sums) {
    AnnualSeries s;
    s.hs_code = code;
    for (const auto& [year, kv] : years) {
      s.points.push_back(SeriesPoint::make(year, kv.first, kv.second));
    }
    out.push_back(std::move(s));
  }
  return out;
}

AnnualSeries interpolate_gaps(const AnnualSeries& series, const CleaningConfig& config) {
  AnnualSeries out;
  out.hs_code = series.hs_code;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    out.points.push_back(p);
    if (i + 1 == series.points.size()) break;
    const auto& q = series.points[i + 1];
    const int gap = q.year - p.year - 1;
    if (gap <= 0 || gap > config.max_interp_gap) continue;
    const double span = static_cast<double>(q.year - p.year);
    for (int y = p.year + 1; y < q.year; ++y) {
      const double w = (y - p.year) / span;
      const double kg = p.kg + w * (q.kg - p.kg);
      const double usd = p.usd + w * (q.usd - p.usd);
      out.points.push_back(SeriesPoint::make(y, kg, usd, PointOrigin::kInterpolated));
    }
  }
  return out;
}

ExclusionResult exclude_sparse(const SeriesSet& series, int first_year, int last_year,
                               const CleaningConfig& config) {
  if (last_year < first_year) throw ConfigError("analysis window is empty");
  const int window = last_year - first_year + 1;
  ExclusionResult result;
  for (const auto& s : series) {
    int present = 0;
    for (const auto& p : s.points) {
      if (p.year >= first_year && p.year <= last_year) ++present;
    }
    const double missing = static_cast<double>(window - present) / window;
    // Relative slack so 1/5 is not "more than" 0.20 after rounding.
    if (missing > config.max_missing_fraction * (1.0 + 1e-12) + 1e-15) {
      result.dropped.push_back({s.hs_code, missing});
    } else {
      result.kept.push_back(s);
    }
  }
  return result;
}

AnnualSeries adjust_inflation(const AnnualSeries& series, const CleaningConfig& config) {
  if (config.cpi_index.empty()) return series;
  const int base_year =
      config.base_year != 0 ? config.base_year : config.cpi_index.begin()->first;
  const auto base_it = config.cpi_index.find(base_year);
  if (base_it == config.cpi_index.end())
    throw ConfigError("deflator table has no entry for base year " +
                      std::to_string(base_year));
  AnnualSeries out = series;
  for (auto& p : out.points) {
    const auto it = config.cpi_index.find(p.year);
    if (it == config.cpi_index.end())
      throw ConfigError("deflator table has no entry for year " + std::to_string(p.year) +
                        " (hs_code " + series.hs_code + ")");
    const double factor = it->second / base_it->second;
    p.usd /= factor;
    if (p.unit_price) p.unit_price = *p.unit_price / factor;
    if (p.uncapped_unit_price) p.uncapped_unit_price = *p.uncapped_unit_price / factor;
  }
  return out;
}

double percentile_linear(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("percentile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

namespace {

double reference_price(const SeriesPoint& p) {
  return p.uncapped_unit_price ? *p.uncapped_unit_price : *p.unit_price;
}

// Caps the priced points of `group` in place; returns the number capped.
std::size_t winsorize(std::vector<SeriesPoint*>& group, const CleaningConfig& config,
                      const std::string& scope, std::vector<std::string>& warnings) {
  std::vector<double> values;
  values.reserve(group.size());
  for (const auto* p : group) values.push_back(reference_price(*p));
  if (values.size() < 2) {
    warnings.push_back("capping skipped for " + scope + ": fewer than 2 priced points");
    return 0;
  }
  std::sort(values.begin(), values.end());
  const double lo = percentile_linear(values, config.cap_lo);
  const double hi = percentile_linear(values, config.cap_hi);
  std::size_t capped = 0;
  for (auto* p : group) {
    const double raw = reference_price(*p);
    const double bounded = std::clamp(raw, lo, hi);
    if (bounded != raw) {
      p->uncapped_unit_price = raw;
      p->unit_price = bounded;
      p->usd = bounded * p->kg;
      p->capped = true;
      ++capped;
    } else if (p->capped) {
      // Re-capping with unchanged bounds leaves the point as it was.
      p->unit_price = raw;
      p->usd = raw * p->kg;
      p->capped = false;
      p->uncapped_unit_price.reset();
    }
  }
  return capped;
}

}  // namespace

CapResult cap_outliers(const SeriesSet& series, const CleaningConfig& config) {
  config.validate();
  CapResult result;
  result.series = series;
  if (config.cap_per_code) {
    for (auto& s : result.series) {
      std::vector<SeriesPoint*> group;
      for (auto& p : s.points) {
        if (p.unit_price) group.push_back(&p);
      }
      result.capped_points += winsorize(group, config, "hs_code " + s.hs_code, result.warnings);
    }
  } else {
    std::vector<SeriesPoint*> group;
    for (auto& s : result.series) {
      for (auto& p : s.points) {
        if (p.unit_price) group.push_back(&p);
      }
    }
    result.capped_points = winsorize(group, config, "pooled prices", result.warnings);
  }
  return result;
}

CleaningResult clean_series(const SeriesSet& raw, int first_year, int last_year,
                            const CleaningConfig& config) {
  config.validate();
  CleaningResult result;
  SeriesSet filled;
  filled.reserve(raw.size());
  for (const auto& s : raw) {
    AnnualSeries windowed;
    windowed.hs_code = s.hs_code;
    for (const auto& p : s.points) {
      if (p.year >= first_year && p.year <= last_year) windowed.points.push_back(p);
    }
    auto f = interpolate_gaps(windowed, config);
    result.report.interpolated_points += f.points.size() - windowed.points.size();
    filled.push_back(std::move(f));
  }
  auto excluded = exclude_sparse(filled, first_year, last_year, config);
  result.report.dropped = std::move(excluded.dropped);
  SeriesSet deflated;
  deflated.reserve(excluded.kept.size());
  for (const auto& s : excluded.kept) deflated.push_back(adjust_inflation(s, config));
  auto capped = cap_outliers(deflated, config);
  result.report.capped_points = capped.capped_points;
  result.report.warnings = std::move(capped.warnings);
  result.series = std::move(capped.series);
  return result;
}

}  // namespace scrapsig
