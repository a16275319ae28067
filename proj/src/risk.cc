#include "scrapsig/risk.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "scrapsig/error.h"
#include "scrapsig_bundled_data.h"

namespace scrapsig {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Data rows of a '#'-commented CSV with a header line.
std::vector<std::vector<std::string>> csv_rows(std::string_view csv, std::size_t min_fields,
                                               const char* what) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header_seen = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    auto fields = split_delimited(t, ',');
    if (fields.size() < min_fields)
      throw ConfigError(std::string(what) + " line " + std::to_string(line_no) + ": expected " +
                        std::to_string(min_fields) + " fields");
    for (auto& f : fields) f = trim(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename Map>
auto longest_prefix(const Map& rows, std::string_view code) {
  auto best = rows.end();
  for (auto it = rows.begin(); it != rows.end(); ++it) {
    if (code.substr(0, it->first.size()) == it->first &&
        (best == rows.end() || it->first.size() > best->first.size()))
      best = it;
  }
  return best;
}

std::int64_t to_micro(double rate) { return std::llround(rate * 1e6); }

}  // namespace

std::optional<double> fitted_relative_change(double intercept, double slope, int span_years) {
  if (!(intercept > 0.0)) return std::nullopt;
  const double end = intercept + slope * span_years;
  return (end - intercept) / intercept;
}

std::vector<SignatureResult> detect_signature_codes(const std::vector<FeatureVector>& features,
                                                    const SignatureThresholds& thresholds) {
  std::vector<SignatureResult> out;
  out.reserve(features.size());
  for (const auto& fv : features) {
    SignatureResult r;
    r.hs_code = fv.hs_code;
    r.signature = signature_flag(fv);
    r.price_change = fitted_relative_change(fv.price_intercept, fv.price_trend, fv.span_years);
    r.volume_change = fitted_relative_change(fv.kg_intercept, fv.kg_trend, fv.span_years);
    r.strong_signature = r.signature && r.price_change && r.volume_change &&
                         *r.price_change <= -thresholds.price_decline &&
                         *r.volume_change >= thresholds.volume_growth;
    out.push_back(std::move(r));
  }
  return out;
}

Forecast forecast_linear(const AnnualSeries& series, int horizon_year) {
  if (series.points.size() < 2)
    throw InsufficientDataError("forecast for " + series.hs_code + ": need >= 2 points");
  const int first = series.points.front().year;
  std::vector<double> tx, kg, px, price;
  for (const auto& p : series.points) {
    tx.push_back(p.year - first);
    kg.push_back(p.kg);
    if (p.unit_price) {
      px.push_back(p.year - first);
      price.push_back(*p.unit_price);
    }
  }
  if (price.size() < 2)
    throw InsufficientDataError("forecast for " + series.hs_code + ": need >= 2 priced points");
  const auto kg_fit = ols_fit(tx, kg);
  const auto price_fit = ols_fit(px, price);
  Forecast f;
  f.hs_code = series.hs_code;
  f.last_observed_year = series.points.back().year;
  if (horizon_year < f.last_observed_year)
    throw ConfigError("forecast horizon " + std::to_string(horizon_year) +
                      " precedes last observed year " + std::to_string(f.last_observed_year));
  for (int y = f.last_observed_year; y <= horizon_year; ++y) {
    const double t = y - first;
    ForecastPoint fp;
    fp.year = y;
    const double k = kg_fit.at(t);
    const double pr = price_fit.at(t);
    fp.kg_floor_clamped = k <= 0.0;
    fp.price_floor_clamped = pr <= 0.0;
    fp.kg = std::max(k, 0.0);
    fp.price = std::max(pr, 0.0);
    f.points.push_back(fp);
  }
  return f;
}

std::string_view to_string(BaselY48 v) {
  switch (v) {
    case BaselY48::kLikely: return "likely";
    case BaselY48::kPossible: return "possible";
    case BaselY48::kNo: return "no";
  }
  return "no";
}

BaselY48 parse_basel_y48(std::string_view text) {
  if (text == "likely") return BaselY48::kLikely;
  if (text == "possible") return BaselY48::kPossible;
  if (text == "no") return BaselY48::kNo;
  throw ConfigError("invalid Y48 value '" + std::string(text) + "'");
}

BaselTable BaselTable::parse(std::string_view csv) {
  BaselTable table;
  for (const auto& row : csv_rows(csv, 4, "basel table")) {
    BaselMatch m;
    m.y48 = parse_basel_y48(row[1]);
    if (row[2] != "true" && row[2] != "false")
      throw ConfigError("basel table: a3210 must be true or false, got '" + row[2] + "'");
    m.a3210 = row[2] == "true";
    m.note = row[3];
    table.rows_[row[0]] = std::move(m);
  }
  return table;
}

BaselTable BaselTable::load(const std::string& path) { return parse(read_file(path)); }

const BaselTable& BaselTable::bundled() {
  static const BaselTable table = parse(bundled::kBaselPicCsv);
  return table;
}

BaselMatch BaselTable::lookup(std::string_view hs_code) const {
  const auto it = longest_prefix(rows_, hs_code);
  if (it == rows_.end()) return BaselMatch{};
  return it->second;
}

BaselMatch basel_overlap(std::string_view hs_code, const BaselTable& table) {
  return table.lookup(hs_code);
}

void TariffTable::set(const std::string& prefix, double lo, double hi) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
    throw ConfigError("tariff " + prefix + ": rates must satisfy 0 <= lo <= hi <= 1");
  rows_[prefix] = RateBand{to_micro(lo), to_micro(hi)};
}

TariffTable TariffTable::parse(std::string_view csv) {
  TariffTable table;
  for (const auto& row : csv_rows(csv, 3, "tariff table")) {
    try {
      table.set(row[0], std::stod(row[1]), std::stod(row[2]));
    } catch (const std::invalid_argument&) {
      throw ConfigError("tariff table: non-numeric rate for prefix " + row[0]);
    }
  }
  return table;
}

TariffTable TariffTable::load(const std::string& path) { return parse(read_file(path)); }

const TariffTable& TariffTable::bundled() {
  static const TariffTable table = parse(bundled::kTariffsCsv);
  return table;
}

std::optional<std::pair<std::string, RateBand>> TariffTable::lookup(
    std::string_view hs_code) const {
  const auto it = longest_prefix(rows_, hs_code);
  if (it == rows_.end()) return std::nullopt;
  return *it;
}

DutyGap duty_gap(std::string_view declared_code, std::string_view true_code,
                 double customs_value_usd, const TariffTable& table) {
  const auto declared = table.lookup(declared_code);
  const auto actual = table.lookup(true_code);
  if (!declared || !actual) {
    std::string missing;
    if (!declared) missing += std::string(declared_code);
    if (!actual) missing += (missing.empty() ? "" : ", ") + std::string(true_code);
    throw ConfigError("tariff table has no prefix matching: " + missing);
  }
  if (declared->first == actual->first) return {0.0, 0.0};
  const auto& d = declared->second;
  const auto& t = actual->second;
  DutyGap gap;
  gap.lo = static_cast<double>(t.lo_micro - d.hi_micro) * customs_value_usd / 1e6;
  gap.hi = static_cast<double>(t.hi_micro - d.lo_micro) * customs_value_usd / 1e6;
  return gap;
}

DilutionResult dilution_model(const DilutionScenario& s) {
  if (s.n_containers < 0 || s.n_poisoned < 0 || s.n_poisoned > s.n_containers)
    throw ConfigError("dilution: need 0 <= n_poisoned <= n_containers");
  if (s.kg_per_container < 0.0 || s.declared_price < 0.0 || s.scrap_price < 0.0)
    throw ConfigError("dilution: masses and prices must be non-negative");
  DilutionResult r;
  r.total_kg = static_cast<double>(s.n_containers) * s.kg_per_container;
  if (!(r.total_kg > 0.0)) throw DataError("dilution: blended price undefined for zero mass");
  r.poisoned_kg = static_cast<double>(s.n_poisoned) * s.kg_per_container;
  r.genuine_kg = r.total_kg - r.poisoned_kg;
  r.declared_value = r.total_kg * s.declared_price;
  r.actual_value = r.genuine_kg * s.declared_price + r.poisoned_kg * s.scrap_price;
  r.blended_price = r.actual_value / r.total_kg;
  r.overstatement_usd = r.declared_value - r.actual_value;
  r.overstatement_fraction =
      r.declared_value > 0.0 ? r.overstatement_usd / r.declared_value : 0.0;
  return r;
}

bool outranks(const WatchlistEntry& a, const WatchlistEntry& b) {
  if (a.signature != b.signature) return a.signature;
  if (a.strong_signature != b.strong_signature) return a.strong_signature;
  if (a.anomaly_years.size() != b.anomaly_years.size())
    return a.anomaly_years.size() > b.anomaly_years.size();
  const bool ra = a.archetype && is_high_risk(*a.archetype);
  const bool rb = b.archetype && is_high_risk(*b.archetype);
  if (ra != rb) return ra;
  if (a.duty_gap_usd.hi != b.duty_gap_usd.hi) return a.duty_gap_usd.hi > b.duty_gap_usd.hi;
  return a.hs_code < b.hs_code;
}

std::vector<WatchlistEntry> build_watchlist(const WatchlistInputs& in) {
  const BaselTable& basel = in.basel ? *in.basel : BaselTable::bundled();
  const TariffTable& tariffs = in.tariffs ? *in.tariffs : TariffTable::bundled();

  std::map<std::string, const SignatureResult*> signatures;
  for (const auto& s : in.signatures) signatures[s.hs_code] = &s;

  std::set<std::string> universe;
  for (const auto& [code, _] : in.segments) universe.insert(code);
  for (const auto& [code, _] : signatures) universe.insert(code);
  for (const auto& [code, _] : in.anomaly_years) universe.insert(code);
  for (const auto& [code, _] : in.forecasts) universe.insert(code);

  std::vector<std::string> orphans;
  for (const auto& code : universe) {
    if (!in.segments.count(code) || !signatures.count(code) || !in.anomaly_years.count(code) ||
        !in.forecasts.count(code))
      orphans.push_back(code);
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& o : orphans) list += (list.empty() ? "" : ", ") + o;
    throw DataError("watchlist inputs disagree on hs codes; orphans: " + list);
  }

  std::vector<WatchlistEntry> entries;
  for (const auto& code : universe) {
    WatchlistEntry e;
    e.hs_code = code;
    e.archetype = in.segments.at(code);
    e.signature = signatures.at(code)->signature;
    e.strong_signature = signatures.at(code)->strong_signature;
    e.anomaly_years = in.anomaly_years.at(code);
    std::sort(e.anomaly_years.begin(), e.anomaly_years.end());
    e.forecast = in.forecasts.at(code).points;
    const auto b = basel.lookup(code);
    e.basel = {b.y48, b.a3210, b.note};
    const auto value_it = in.duty.customs_value_usd.find(code);
    const double value = value_it == in.duty.customs_value_usd.end() ? 0.0 : value_it->second;
    if (tariffs.lookup(code) && tariffs.lookup(in.duty.true_code)) {
      e.duty_gap_usd = duty_gap(code, in.duty.true_code, value, tariffs);
    } else {
      e.duty_note = "tariff unmapped";
    }
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), outranks);
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].risk_rank = static_cast<int>(i + 1);
  return entries;
}

}  // namespace scrapsig
