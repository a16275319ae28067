#include "scrapsig/config.h"

#include <charconv>
#include <fstream>
#include <functional>

#include "scrapsig/error.h"
#include "scrapsig/features.h"

namespace scrapsig {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

char parse_delimiter(const std::string& text) {
  if (text == "tab" || text == "\\t" || text == "\t") return '\t';
  if (text == "comma" || text == ",") return ',';
  if (text == "semicolon" || text == ";") return ';';
  if (text == "pipe" || text == "|") return '|';
  if (text.size() == 1) return text[0];
  throw ConfigError("unsupported delimiter '" + text + "'");
}

std::string delimiter_name(char c) {
  switch (c) {
    case '\t': return "tab";
    case ',': return "comma";
    case ';': return "semicolon";
    case '|': return "pipe";
    default: return std::string(1, c);
  }
}

std::map<int, double> load_cpi(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open cpi table '" + path + "'");
  std::map<int, double> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto cells = split_delimited(t, ',');
    if (cells.size() < 2) throw ConfigError("cpi table '" + path + "': malformed row '" + t + "'");
    out[parse_number<int>("cpi.year", trim(cells[0]))] =
        parse_number<double>("cpi.index", trim(cells[1]));
  }
  return out;
}

}  // namespace

IniFile IniFile::parse(std::istream& in, const std::string& origin) {
  IniFile ini;
  std::string section = "run";
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    ini.values_[section + "." + key] = trim(std::string_view(t).substr(eq + 1));
  }
  return ini;
}

IniFile IniFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse(in, path);
}

void RunConfig::apply(const std::map<std::string, std::string>& values) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto sz = [](std::size_t& dst) {
    return Setter([&dst](const std::string& k, const std::string& v) {
      dst = parse_number<std::size_t>(k, v);
    });
  };
  auto dbl = [](double& dst) {
    return Setter([&dst](const std::string& k, const std::string& v) {
      dst = parse_number<double>(k, v);
    });
  };
  auto str = [](std::string& dst) {
    return Setter([&dst](const std::string&, const std::string& v) { dst = v; });
  };
  auto opt_str = [](std::optional<std::string>& dst) {
    return Setter([&dst](const std::string&, const std::string& v) {
      if (v.empty()) dst.reset(); else dst = v;
    });
  };
  auto opt_int = [](std::optional<int>& dst) {
    return Setter([&dst](const std::string& k, const std::string& v) {
      if (v.empty() || v == "auto") dst.reset(); else dst = parse_number<int>(k, v);
    });
  };
  auto boolean = [](bool& dst) {
    return Setter([&dst](const std::string& k, const std::string& v) { dst = parse_bool(k, v); });
  };

  const std::map<std::string, Setter> setters = {
      {"run.input", str(input)},
      {"run.labels", opt_str(labels)},
      {"run.out", str(out)},
      {"run.seed", [this](const std::string& k, const std::string& v) {
         seed = parse_number<std::uint64_t>(k, v);
       }},
      {"run.threads", [this](const std::string& k, const std::string& v) {
         threads = parse_number<unsigned>(k, v);
       }},
      {"ingest.preset", [this](const std::string&, const std::string& v) {
         preset = v;
         columns = ColumnMapping::preset(v);
       }},
      {"ingest.delimiter", [this](const std::string&, const std::string& v) {
         delimiter = parse_delimiter(v);
       }},
      {"ingest.col_hs_code", str(columns.hs_code)},
      {"ingest.col_year", str(columns.year)},
      {"ingest.col_flow", str(columns.flow)},
      {"ingest.col_reporter", str(columns.reporter)},
      {"ingest.col_partner", str(columns.partner)},
      {"ingest.col_value_usd", str(columns.value_usd)},
      {"ingest.col_mass_kg", str(columns.mass_kg)},
      {"ingest.first_year", opt_int(first_year)},
      {"ingest.last_year", opt_int(last_year)},
      {"ingest.flow", str(flow)},
      {"ingest.reporter", opt_str(reporter)},
      {"ingest.aggregate", boolean(aggregate)},
      {"ingest.max_missing_fraction", dbl(cleaning.max_missing_fraction)},
      {"ingest.max_interp_gap", [this](const std::string& k, const std::string& v) {
         cleaning.max_interp_gap = parse_number<int>(k, v);
       }},
      {"ingest.cap_lo", dbl(cleaning.cap_lo)},
      {"ingest.cap_hi", dbl(cleaning.cap_hi)},
      {"ingest.cap_scope", [this](const std::string& k, const std::string& v) {
         if (v == "pooled") cleaning.cap_per_code = false;
         else if (v == "per-code") cleaning.cap_per_code = true;
         else throw ConfigError("config key '" + k + "': expected pooled or per-code");
       }},
      {"ingest.base_year", [this](const std::string& k, const std::string& v) {
         cleaning.base_year = parse_number<int>(k, v);
       }},
      {"ingest.cpi", opt_str(cpi_path)},
      {"features.set", str(features)},
      {"segment.features", str(segment_features)},
      {"segment.k", sz(k)},
      {"segment.n_init", sz(n_init)},
      {"segment.max_iter", sz(max_iter)},
      {"segment.tol", dbl(tol)},
      {"segment.elbow_k_min", sz(elbow_k_min)},
      {"segment.elbow_k_max", sz(elbow_k_max)},
      {"anomaly.mode", str(anomaly_mode)},
      {"anomaly.threshold", dbl(anomaly_threshold)},
      {"anomaly.n_trees", sz(iforest_trees)},
      {"anomaly.psi", sz(iforest_psi)},
      {"forest.n_trees", sz(n_trees)},
      {"forest.features_per_split", [this](const std::string& k, const std::string& v) {
         if (v.empty() || v == "sqrt") features_per_split.reset();
         else if (v == "all") features_per_split = 0;
         else features_per_split = parse_number<std::size_t>(k, v);
       }},
      {"forest.max_depth", opt_int(max_depth)},
      {"forest.min_samples_split", sz(min_samples_split)},
      {"forest.bootstrap", boolean(bootstrap)},
      {"evaluate.folds", sz(folds)},
      {"evaluate.holdout", boolean(holdout)},
      {"explain.conditioning", str(conditioning)},
      {"risk.horizon", [this](const std::string& k, const std::string& v) {
         horizon = parse_number<int>(k, v);
       }},
      {"risk.strong_price_decline", dbl(strong_price_decline)},
      {"risk.strong_volume_growth", dbl(strong_volume_growth)},
      {"risk.true_code", str(true_code)},
      {"risk.basel", opt_str(basel_path)},
      {"risk.tariffs", opt_str(tariff_path)},
  };
  // Presets first so explicit column keys override them.
  if (auto it = values.find("ingest.preset"); it != values.end())
    setters.at(it->first)(it->first, it->second);
  for (const auto& [key, value] : values) {
    if (key == "ingest.preset") continue;
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  if (cpi_path) cleaning.cpi_index = load_cpi(*cpi_path);
}

void RunConfig::validate() const {
  cleaning.validate();
  feature_set(features);
  feature_set(segment_features);
  if (k < 1) throw ConfigError("segment.k must be >= 1");
  if (n_init < 1) throw ConfigError("segment.n_init must be >= 1");
  if (elbow_k_min < 1 || elbow_k_max < elbow_k_min)
    throw ConfigError("segment elbow range must satisfy 1 <= k_min <= k_max");
  if (!(anomaly_threshold > 0.0 && anomaly_threshold <= 1.0))
    throw ConfigError("anomaly.threshold must lie in (0, 1]");
  if (anomaly_mode != "per-code" && anomaly_mode != "pooled")
    throw ConfigError("anomaly.mode must be per-code or pooled");
  if (iforest_trees < 1 || iforest_psi < 2) throw ConfigError("anomaly forest needs n_trees >= 1, psi >= 2");
  if (n_trees < 1) throw ConfigError("forest.n_trees must be >= 1");
  if (folds < 2 && !holdout) throw ConfigError("evaluate.folds must be >= 2");
  if (conditioning != "path-dependent" && conditioning != "interventional")
    throw ConfigError("explain.conditioning must be path-dependent or interventional");
  if (flow != "import" && flow != "export" && flow != "all")
    throw ConfigError("ingest.flow must be import, export or all");
  if (first_year && last_year && *first_year > *last_year)
    throw ConfigError("ingest.first_year exceeds ingest.last_year");
  if (strong_price_decline < 0.0 || strong_volume_growth < 0.0)
    throw ConfigError("strong signature thresholds must be non-negative");
}

Json RunConfig::to_json() const {
  auto opt = [](const auto& o) { return o ? Json(*o) : Json(nullptr); };
  Json cpi = Json::object();
  for (const auto& [year, index] : cleaning.cpi_index) cpi[std::to_string(year)] = index;
  return {
      {"run", {{"input", input}, {"labels", opt(labels)}, {"seed", seed}}},
      {"ingest",
       {{"preset", preset},
        {"columns",
         {{"hs_code", columns.hs_code},
          {"year", columns.year},
          {"flow", columns.flow},
          {"reporter", columns.reporter},
          {"partner", columns.partner},
          {"value_usd", columns.value_usd},
          {"mass_kg", columns.mass_kg}}},
        {"delimiter", delimiter_name(delimiter)},
        {"first_year", opt(first_year)},
        {"last_year", opt(last_year)},
        {"flow", flow},
        {"reporter", opt(reporter)},
        {"aggregate", aggregate},
        {"max_missing_fraction", cleaning.max_missing_fraction},
        {"max_interp_gap", cleaning.max_interp_gap},
        {"cap_lo", cleaning.cap_lo},
        {"cap_hi", cleaning.cap_hi},
        {"cap_scope", cleaning.cap_per_code ? "per-code" : "pooled"},
        {"base_year", cleaning.base_year},
        {"cpi", cpi}}},
      {"features", {{"set", features}}},
      {"segment",
       {{"features", segment_features},
        {"k", k},
        {"n_init", n_init},
        {"max_iter", max_iter},
        {"tol", tol},
        {"elbow_k_min", elbow_k_min},
        {"elbow_k_max", elbow_k_max}}},
      {"anomaly",
       {{"mode", anomaly_mode},
        {"threshold", anomaly_threshold},
        {"n_trees", iforest_trees},
        {"psi", iforest_psi}}},
      {"forest",
       {{"n_trees", n_trees},
        {"features_per_split", opt(features_per_split)},
        {"max_depth", opt(max_depth)},
        {"min_samples_split", min_samples_split},
        {"bootstrap", bootstrap}}},
      {"evaluate", {{"folds", folds}, {"holdout", holdout}}},
      {"explain", {{"conditioning", conditioning}}},
      {"risk",
       {{"horizon", horizon},
        {"strong_price_decline", strong_price_decline},
        {"strong_volume_growth", strong_volume_growth},
        {"true_code", true_code},
        {"basel", opt(basel_path)},
        {"tariffs", opt(tariff_path)}}},
  };
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

Json metadata_block(const RunConfig& config, const std::string& stage) {
  return {{"schema_version", kSchemaVersion},
          {"stage", stage},
          {"seed", config.seed},
          {"config_hash", config.hash()},
          {"config", config.to_json()}};
}

}  // namespace scrapsig
