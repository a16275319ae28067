#include "scrapsig/report.h"

#include <charconv>

#include "scrapsig/error.h"
#include "scrapsig/ingest.h"

namespace scrapsig {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Header line after any '#' lines; returns false at EOF.
bool read_header(std::istream& in, std::vector<std::string>& header) {
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    header = split_delimited(trim(line), ',');
    for (auto& h : header) h = trim(h);
    return true;
  }
  return false;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name,
                   const char* what) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw DataError(std::string(what) + ": missing column '" + name + "'");
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_metadata(std::ostream& out, const Json& metadata) {
  out << "# schema_version=" << metadata.at("schema_version").get<int>()
      << " stage=" << metadata.at("stage").get<std::string>()
      << " seed=" << metadata.at("seed").get<std::uint64_t>()
      << " config_hash=" << metadata.at("config_hash").get<std::string>() << '\n';
}

void write_features_csv(std::ostream& out, const std::vector<FeatureVector>& vectors,
                        const std::vector<std::string>& feature_names) {
  out << "hs_code";
  for (const auto& n : feature_names) out << ',' << n;
  out << ",signature\n";
  for (const auto& fv : vectors) {
    out << fv.hs_code;
    for (const auto& n : feature_names) out << ',' << format_double(fv.get(n));
    out << ',' << (signature_flag(fv) ? "true" : "false") << '\n';
  }
}

void write_segments_csv(std::ostream& out, const std::vector<SegmentRow>& rows) {
  out << "hs_code,cluster,archetype\n";
  for (const auto& r : rows) {
    out << r.hs_code << ',' << r.cluster << ','
        << (r.archetype ? std::string(to_string(*r.archetype)) : std::string()) << '\n';
  }
}

std::vector<SegmentRow> read_segments_csv(std::istream& in) {
  std::vector<std::string> header;
  if (!read_header(in, header)) throw DataError("segments csv: empty file");
  const auto c_code = column(header, "hs_code", "segments csv");
  const auto c_cluster = column(header, "cluster", "segments csv");
  const auto c_arch = column(header, "archetype", "segments csv");
  std::vector<SegmentRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    const auto cells = split_delimited(trim(line), ',');
    if (cells.size() < header.size()) throw DataError("segments csv: short row '" + line + "'");
    SegmentRow r;
    r.hs_code = trim(cells[c_code]);
    const auto cl = trim(cells[c_cluster]);
    auto [p, ec] = std::from_chars(cl.data(), cl.data() + cl.size(), r.cluster);
    if (ec != std::errc() || p != cl.data() + cl.size())
      throw DataError("segments csv: bad cluster '" + cl + "'");
    const auto a = trim(cells[c_arch]);
    if (!a.empty()) r.archetype = parse_archetype(a);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_anomalies_csv(std::ostream& out, const std::vector<AnomalyFlag>& flags) {
  out << "hs_code,year,kg,score,is_anomaly\n";
  for (const auto& f : flags) {
    out << f.hs_code << ',' << f.year << ',' << format_double(f.observed_kg) << ','
        << format_double(f.score) << ',' << (f.is_anomaly ? "true" : "false") << '\n';
  }
}

void write_shap_csv(std::ostream& out, const ShapSummary& summary) {
  out << "feature,class,mean_abs_shap\n";
  for (std::size_t c = 0; c < summary.class_names.size(); ++c) {
    for (const auto& f : summary.per_class[c]) {
      out << f.feature << ',' << csv_escape(summary.class_names[c]) << ','
          << format_double(f.mean_abs) << '\n';
    }
  }
  for (const auto& f : summary.overall)
    out << f.feature << ",overall," << format_double(f.mean_abs) << '\n';
}

void write_forecasts_csv(std::ostream& out, const std::vector<Forecast>& forecasts) {
  out << "hs_code,year,kg_hat,price_hat,kg_floor_clamped,price_floor_clamped,observed\n";
  for (const auto& f : forecasts) {
    for (const auto& p : f.points) {
      out << f.hs_code << ',' << p.year << ',' << format_double(p.kg) << ','
          << format_double(p.price) << ',' << (p.kg_floor_clamped ? "true" : "false") << ','
          << (p.price_floor_clamped ? "true" : "false") << ','
          << (p.year <= f.last_observed_year ? "true" : "false") << '\n';
    }
  }
}

void write_watchlist_csv(std::ostream& out, const std::vector<WatchlistEntry>& entries) {
  out << "risk_rank,hs_code,archetype,signature,strong_signature,anomaly_count,anomaly_years,"
         "forecast_year,forecast_kg,forecast_price,basel_y48,basel_a3210,duty_gap_lo,"
         "duty_gap_hi,duty_note\n";
  for (const auto& e : entries) {
    std::string years;
    for (std::size_t i = 0; i < e.anomaly_years.size(); ++i) {
      if (i) years += ';';
      years += std::to_string(e.anomaly_years[i]);
    }
    out << e.risk_rank << ',' << e.hs_code << ','
        << (e.archetype ? std::string(to_string(*e.archetype)) : std::string()) << ','
        << (e.signature ? "true" : "false") << ',' << (e.strong_signature ? "true" : "false")
        << ',' << e.anomaly_years.size() << ',' << years << ',';
    if (e.forecast.empty()) {
      out << ",,";
    } else {
      const auto& last = e.forecast.back();
      out << last.year << ',' << format_double(last.kg) << ',' << format_double(last.price);
    }
    out << ',' << to_string(e.basel.y48) << ',' << (e.basel.a3210 ? "true" : "false") << ','
        << format_double(e.duty_gap_usd.lo) << ',' << format_double(e.duty_gap_usd.hi) << ','
        << csv_escape(e.duty_note) << '\n';
  }
}

std::map<std::string, std::string> read_labels_csv(std::istream& in) {
  std::vector<std::string> header;
  if (!read_header(in, header)) throw DataError("labels csv: empty file");
  const auto c_code = column(header, "hs_code", "labels csv");
  const auto c_label = column(header, "label", "labels csv");
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line[0] == '#') continue;
    const auto cells = split_delimited(trim(line), ',');
    if (cells.size() <= std::max(c_code, c_label))
      throw DataError("labels csv: short row '" + line + "'");
    out[trim(cells[c_code])] = trim(cells[c_label]);
  }
  return out;
}

}  // namespace scrapsig
