#include "scrapsig/pipeline.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "scrapsig/anomaly.h"
#include "scrapsig/error.h"
#include "scrapsig/explain.h"
#include "scrapsig/features.h"
#include "scrapsig/ingest.h"
#include "scrapsig/parallel.h"
#include "scrapsig/report.h"
#include "scrapsig/risk.h"
#include "scrapsig/segment.h"
#include "scrapsig/svg.h"
#include "scrapsig/trees.h"

namespace fs = std::filesystem;

namespace scrapsig {

namespace {

std::string csv_comment(const Json& meta) {
  std::ostringstream os;
  write_csv_metadata(os, meta);
  return os.str();
}

std::string svg_comment(const Json& meta) {
  return "schema_version=" + std::to_string(meta.at("schema_version").get<int>()) +
         " stage=" + meta.at("stage").get<std::string>() +
         " seed=" + std::to_string(meta.at("seed").get<std::uint64_t>()) +
         " config_hash=" + meta.at("config_hash").get<std::string>();
}

// Class names and ids for train/evaluate. Archetype labels keep enum order.
struct Labels {
  std::vector<std::string> class_names;
  std::map<std::string, std::size_t> by_code;
  std::string source;
};

Labels make_labels(const std::map<std::string, std::string>& raw, std::string source) {
  Labels out;
  out.source = std::move(source);
  bool archetypes = !raw.empty();
  for (const auto& [code, label] : raw) {
    try {
      parse_archetype(label);
    } catch (const DataError&) {
      archetypes = false;
    } catch (const ConfigError&) {
      archetypes = false;
    }
  }
  if (archetypes) {
    for (std::size_t a = 0; a < kArchetypeCount; ++a)
      out.class_names.emplace_back(to_string(static_cast<Archetype>(a)));
  } else {
    std::set<std::string> names;
    for (const auto& [code, label] : raw) names.insert(label);
    out.class_names.assign(names.begin(), names.end());
  }
  for (const auto& [code, label] : raw) {
    const auto it = std::find(out.class_names.begin(), out.class_names.end(), label);
    out.by_code[code] = static_cast<std::size_t>(it - out.class_names.begin());
  }
  return out;
}

std::optional<Flow> flow_filter(const std::string& flow) {
  if (flow == "all") return std::nullopt;
  return flow == "export" ? Flow::kExport : Flow::kImport;
}

}  // namespace

Pipeline::Pipeline(RunConfig config, std::ostream& log)
    : config_(std::move(config)), out_(config_.out), log_(log) {
  config_.validate();
  set_max_threads(config_.threads);
}

void Pipeline::begin(const char* stage) {
  stage_ = stage;
  stage_log_.clear();
  std::error_code ec;
  fs::create_directories(out_, ec);
  if (ec) throw DataError("cannot create output directory '" + out_.string() + "': " + ec.message());
  note("start, config_hash=" + config_.hash() + " seed=" + std::to_string(config_.seed));
}

void Pipeline::note(const std::string& message) {
  log_ << '[' << stage_ << "] " << message << '\n';
  stage_log_ += message + '\n';
}

void Pipeline::end() {
  note("done");
  write_text(out_ / "logs" / (stage_ + ".log"), stage_log_);
}

Json Pipeline::read_artifact(const char* file, const char* producer) const {
  const auto p = out_ / file;
  std::ifstream in(p);
  if (!in) {
    throw ConfigError("missing upstream artifact '" + p.string() + "'; run the '" + producer +
                      "' stage first");
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("artifact '" + p.string() + "' is not valid JSON: " + e.what());
  }
  const auto& meta = j.at("metadata");
  if (meta.at("schema_version").get<int>() != kSchemaVersion)
    throw DataError("artifact '" + p.string() + "' has an unsupported schema_version");
  return j;
}

void Pipeline::write_json(const char* file, const Json& j) const {
  write_text(out_ / file, j.dump(2) + "\n");
}

void Pipeline::write_text(const fs::path& file, const std::string& text) const {
  std::error_code ec;
  fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + file.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + file.string() + "'");
}

void Pipeline::ingest(std::istream& input) {
  begin("ingest");
  ParseOptions popt;
  popt.delimiter = config_.delimiter;
  popt.min_year = config_.first_year;
  popt.max_year = config_.last_year;
  auto parsed = parse_records(input, config_.columns, popt);
  note("parsed " + std::to_string(parsed.records.size()) + " rows, rejected " +
       std::to_string(parsed.rejected.size()));
  if (parsed.records.empty()) throw DataError("ingest: no valid trade rows in '" + config_.input + "'");

  SeriesSet raw;
  if (config_.aggregate) {
    raw = aggregate_annual(parsed.records, flow_filter(config_.flow), config_.reporter);
  } else {
    // One row per (code, year) is expected when aggregation is disabled.
    std::map<std::string, AnnualSeries> by_code;
    const auto ff = flow_filter(config_.flow);
    for (const auto& r : parsed.records) {
      if (ff && r.flow != *ff) continue;
      if (config_.reporter && r.reporter != *config_.reporter) continue;
      auto& s = by_code[r.hs_code];
      s.hs_code = r.hs_code;
      if (s.find(r.year))
        throw DataError("ingest: duplicate " + r.hs_code + "/" + std::to_string(r.year) +
                        " rows with aggregation disabled");
      s.points.push_back(SeriesPoint::make(r.year, r.mass_kg, r.value_usd));
    }
    for (auto& [code, s] : by_code) {
      std::sort(s.points.begin(), s.points.end(),
                [](const SeriesPoint& a, const SeriesPoint& b) { return a.year < b.year; });
      raw.push_back(std::move(s));
    }
  }
  int first = config_.first_year.value_or(std::numeric_limits<int>::max());
  int last = config_.last_year.value_or(std::numeric_limits<int>::min());
  if (!config_.first_year || !config_.last_year) {
    for (const auto& s : raw) {
      for (const auto& p : s.points) {
        if (!config_.first_year) first = std::min(first, p.year);
        if (!config_.last_year) last = std::max(last, p.year);
      }
    }
  }
  if (raw.empty()) throw DataError("ingest: no rows match the flow/reporter filters");
  auto cleaned = clean_series(raw, first, last, config_.cleaning);
  cleaned.report.accepted_rows = parsed.records.size();
  cleaned.report.rejected.insert(cleaned.report.rejected.begin(), parsed.rejected.begin(),
                                 parsed.rejected.end());
  for (const auto& w : cleaned.report.warnings) note("warning: " + w);
  note(std::to_string(cleaned.series.size()) + " codes kept over " + std::to_string(first) + "-" +
       std::to_string(last) + ", " + std::to_string(cleaned.report.dropped.size()) + " dropped");
  if (cleaned.series.empty()) throw DataError("ingest: every code was excluded during cleaning");

  const auto meta = metadata_block(config_, "ingest");
  write_json(artifact::kSeries, {{"metadata", meta},
                                 {"window", {{"first_year", first}, {"last_year", last}}},
                                 {"series", to_json(cleaned.series)}});
  write_json(artifact::kCleaningReport, {{"metadata", meta}, {"report", to_json(cleaned.report)}});
  end();
}

void Pipeline::features() {
  begin("features");
  const auto j = read_artifact(artifact::kSeries, "ingest");
  const auto series = series_set_from_json(j.at("series"));
  std::vector<FeatureVector> vectors(series.size());
  parallel_for(series.size(), [&](std::size_t i) { vectors[i] = compute_features(series[i]); });
  const auto names = feature_set(config_.features);
  const auto norm = zscore_normalize(vectors, names);
  Json fv = Json::array();
  for (const auto& v : vectors) fv.push_back(to_json(v));
  const auto meta = metadata_block(config_, "features");
  write_json(artifact::kFeaturesJson, {{"metadata", meta},
                                       {"feature_names", names},
                                       {"features", fv},
                                       {"normalization", to_json(norm)}});
  std::ostringstream csv;
  csv << csv_comment(meta);
  write_features_csv(csv, vectors, names);
  write_text(out_ / artifact::kFeaturesCsv, csv.str());
  std::size_t sig = 0;
  for (const auto& v : vectors) sig += signature_flag(v);
  note(std::to_string(vectors.size()) + " feature vectors, " + std::to_string(sig) +
       " with the inverse price-volume signature");
  end();
}

namespace {

std::vector<FeatureVector> load_vectors(const Json& j) {
  std::vector<FeatureVector> out;
  for (const auto& v : j.at("features")) out.push_back(feature_vector_from_json(v));
  return out;
}

}  // namespace

void Pipeline::segment() {
  begin("segment");
  const auto j = read_artifact(artifact::kFeaturesJson, "features");
  const auto vectors = load_vectors(j);
  const auto names = feature_set(config_.segment_features);
  const auto norm = zscore_normalize(vectors, names);
  if (norm.n_rows() < config_.k)
    throw DataError("segment: " + std::to_string(norm.n_rows()) + " codes cannot form k = " +
                    std::to_string(config_.k) + " clusters");

  KMeansOptions ko;
  ko.k = config_.k;
  ko.seed = config_.seed;
  ko.n_init = static_cast<int>(config_.n_init);
  ko.max_iter = static_cast<int>(config_.max_iter);
  ko.tol = config_.tol;
  const auto model = kmeans_fit(norm.values, ko);
  const std::size_t k_max = std::min(config_.elbow_k_max, norm.n_rows());
  const auto elbow = elbow_scan(norm.values, std::min(config_.elbow_k_min, k_max), k_max, ko);
  for (const auto& w : elbow.warnings) note("warning: " + w);
  note("k = " + std::to_string(config_.k) + ", inertia " + format_double(model.inertia) +
       ", elbow recommends " +
       (elbow.recommended_k ? std::to_string(*elbow.recommended_k) : std::string("none")));

  std::vector<std::optional<Archetype>> by_cluster(model.k);
  Json labeling = nullptr;
  if (model.k == kArchetypeCount) {
    const auto lab = label_archetypes(centroid_profiles(model, norm));
    Json clusters = Json::array();
    for (std::size_t c = 0; c < model.k; ++c) {
      by_cluster[c] = lab.by_cluster[c];
      clusters.push_back({{"cluster", c},
                          {"archetype", std::string(to_string(lab.by_cluster[c]))},
                          {"rationale", lab.rationale[c]}});
    }
    labeling = clusters;
  } else {
    note("archetype labels need k = 4; segments left unlabeled");
  }

  Json curve = Json::array();
  for (const auto& [k, inertia] : elbow.curve) curve.push_back({{"k", k}, {"inertia", inertia}});
  const auto meta = metadata_block(config_, "segment");
  write_json(artifact::kSegmentModel,
             {{"metadata", meta},
              {"model", to_json(model, norm)},
              {"assignments",
               [&] {
                 Json a = Json::object();
                 for (std::size_t i = 0; i < norm.rows.size(); ++i) a[norm.rows[i]] = model.labels[i];
                 return a;
               }()},
              {"labeling", labeling},
              {"elbow",
               {{"curve", curve},
                {"recommended_k", elbow.recommended_k ? Json(*elbow.recommended_k) : Json(nullptr)},
                {"warnings", elbow.warnings}}}});
  std::vector<SegmentRow> rows;
  for (std::size_t i = 0; i < norm.rows.size(); ++i)
    rows.push_back({norm.rows[i], model.labels[i], by_cluster[model.labels[i]]});
  std::ostringstream csv;
  csv << csv_comment(meta);
  write_segments_csv(csv, rows);
  write_text(out_ / artifact::kSegmentsCsv, csv.str());
  end();
}

void Pipeline::detect_anomalies() {
  begin("detect-anomalies");
  const auto j = read_artifact(artifact::kSeries, "ingest");
  const auto series = series_set_from_json(j.at("series"));
  AnomalyOptions ao;
  ao.mode = parse_anomaly_mode(config_.anomaly_mode);
  ao.threshold = config_.anomaly_threshold;
  ao.n_trees = config_.iforest_trees;
  ao.psi = config_.iforest_psi;
  ao.seed = config_.seed;
  const auto result = flag_year_anomalies(series, ao);
  for (const auto& w : result.warnings) note("warning: " + w);
  Json flags = Json::array();
  std::size_t flagged = 0;
  for (const auto& f : result.flags) {
    flags.push_back(to_json(f));
    flagged += f.is_anomaly;
  }
  note(std::to_string(flagged) + " of " + std::to_string(result.flags.size()) +
       " code-years flagged at threshold " + format_double(ao.threshold));
  auto meta = metadata_block(config_, "detect-anomalies");
  meta["mode"] = std::string(to_string(ao.mode));
  meta["threshold"] = ao.threshold;
  write_json(artifact::kAnomaliesJson,
             {{"metadata", meta}, {"flags", flags}, {"warnings", result.warnings}});
  std::ostringstream csv;
  csv << csv_comment(meta);
  write_anomalies_csv(csv, result.flags);
  write_text(out_ / artifact::kAnomaliesCsv, csv.str());
  end();
}

namespace {

struct TrainingSet {
  Matrix x;
  std::vector<std::size_t> y;
  std::vector<std::string> codes;
  std::vector<std::string> feature_names;
  Labels labels;
};

}  // namespace

static TrainingSet load_training_set(const Json& features, const RunConfig& config,
                                     const std::filesystem::path& out) {
  TrainingSet ts;
  std::map<std::string, std::string> raw;
  if (config.labels) {
    std::ifstream in(*config.labels);
    if (!in) throw ConfigError("cannot open labels file '" + *config.labels + "'");
    raw = read_labels_csv(in);
    ts.labels = make_labels(raw, *config.labels);
  } else {
    const auto p = out / artifact::kSegmentsCsv;
    std::ifstream in(p);
    if (!in) {
      throw ConfigError("missing upstream artifact '" + p.string() +
                        "'; run the 'segment' stage first or pass --labels");
    }
    for (const auto& r : read_segments_csv(in)) {
      raw[r.hs_code] = r.archetype ? std::string(to_string(*r.archetype))
                                   : "cluster_" + std::to_string(r.cluster);
    }
    ts.labels = make_labels(raw, artifact::kSegmentsCsv);
  }
  ts.feature_names = features.at("feature_names").get<std::vector<std::string>>();
  const auto vectors = load_vectors(features);
  const auto norm = normalized_matrix_from_json(features.at("normalization"));
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto it = ts.labels.by_code.find(vectors[i].hs_code);
    if (it == ts.labels.by_code.end()) {
      missing.push_back(vectors[i].hs_code);
      continue;
    }
    ts.x.push_back(norm.values[i]);
    ts.y.push_back(it->second);
    ts.codes.push_back(vectors[i].hs_code);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError("no label for hs codes: " + list);
  }
  return ts;
}

namespace {

ForestOptions forest_options(const RunConfig& c) {
  ForestOptions fo;
  fo.n_trees = c.n_trees;
  fo.seed = c.seed;
  fo.bootstrap = c.bootstrap;
  fo.features_per_split = c.features_per_split;
  fo.max_depth = c.max_depth;
  fo.min_samples_split = c.min_samples_split;
  return fo;
}

}  // namespace

void Pipeline::train() {
  begin("train");
  const auto features = read_artifact(artifact::kFeaturesJson, "features");
  const auto ts = load_training_set(features, config_, out_);
  const auto model =
      forest_fit(ts.x, ts.y, ts.feature_names, ts.labels.class_names, forest_options(config_));
  const auto hash = model_hash(model);
  note(std::to_string(model.trees.size()) + " trees on " + std::to_string(ts.x.size()) +
       " codes, labels from " + ts.labels.source + ", model_hash " + hash);
  write_json(artifact::kForest, {{"metadata", metadata_block(config_, "train")},
                                 {"label_source", ts.labels.source},
                                 {"model_hash", hash},
                                 {"model", to_json(model)}});
  end();
}

void Pipeline::evaluate(std::ostream* table) {
  begin("evaluate");
  const auto features = read_artifact(artifact::kFeaturesJson, "features");
  const auto ts = load_training_set(features, config_, out_);
  EvaluateOptions eo;
  eo.folds = config_.folds;
  eo.seed = config_.seed;
  eo.forest = forest_options(config_);
  eo.holdout = config_.holdout;
  const auto report = scrapsig::evaluate(ts.x, ts.y, ts.feature_names, ts.labels.class_names, eo);
  note("accuracy " + format_double(report.accuracy.mean) + " +- " +
       format_double(report.accuracy.std));
  const auto meta = metadata_block(config_, "evaluate");
  write_json(artifact::kCvReportJson,
             {{"metadata", meta}, {"label_source", ts.labels.source}, {"report", to_json(report)}});
  const auto text = format_cv_table(report);
  write_text(out_ / artifact::kCvReportTxt, csv_comment(meta) + text);
  if (table) *table << text;
  end();
}

void Pipeline::explain() {
  begin("explain");
  const auto forest_j = read_artifact(artifact::kForest, "train");
  const auto features = read_artifact(artifact::kFeaturesJson, "features");
  const auto model = forest_from_json(forest_j.at("model"));
  const auto norm = normalized_matrix_from_json(features.at("normalization"));
  if (norm.cols != model.feature_names)
    throw DataError("explain: forest feature names do not match features.json");
  ShapOptions so;
  if (config_.conditioning == "interventional") {
    so.conditioning = Conditioning::kInterventional;
    so.background = &norm.values;
  }
  const auto summary = mean_abs_shap(model, norm.values, so);
  Json per_sample = Json::array();
  for (std::size_t i = 0; i < norm.rows.size(); ++i) {
    auto e = to_json(summary.explanations[i], model.feature_names, model.class_names);
    Json row = {{"hs_code", norm.rows[i]}};
    for (auto it = e.begin(); it != e.end(); ++it) row[it.key()] = it.value();
    per_sample.push_back(std::move(row));
  }
  auto ranking = [](const std::vector<FeatureImportance>& v) {
    Json a = Json::array();
    for (const auto& f : v) a.push_back({{"feature", f.feature}, {"mean_abs_shap", f.mean_abs}});
    return a;
  };
  Json per_class = Json::object();
  for (std::size_t c = 0; c < summary.class_names.size(); ++c)
    per_class[summary.class_names[c]] = ranking(summary.per_class[c]);
  const auto meta = metadata_block(config_, "explain");
  write_json(artifact::kShapJson, {{"metadata", meta},
                                   {"conditioning", config_.conditioning},
                                   {"output", "probability"},
                                   {"model_hash", forest_j.at("model_hash")},
                                   {"overall", ranking(summary.overall)},
                                   {"per_class", per_class},
                                   {"samples", per_sample}});
  std::ostringstream csv;
  csv << csv_comment(meta);
  write_shap_csv(csv, summary);
  write_text(out_ / artifact::kShapCsv, csv.str());
  write_text(out_ / artifact::kShapSvg, render_shap_bars_svg(summary, svg_comment(meta)));
  if (!summary.overall.empty()) note("top feature " + summary.overall.front().feature);
  end();
}

void Pipeline::forecast() {
  begin("forecast");
  const auto j = read_artifact(artifact::kSeries, "ingest");
  const auto series = series_set_from_json(j.at("series"));
  std::vector<Forecast> forecasts(series.size());
  parallel_for(series.size(),
               [&](std::size_t i) { forecasts[i] = forecast_linear(series[i], config_.horizon); });
  Json arr = Json::array();
  for (const auto& f : forecasts) arr.push_back(to_json(f));
  const auto meta = metadata_block(config_, "forecast");
  write_json(artifact::kForecastsJson,
             {{"metadata", meta}, {"horizon", config_.horizon}, {"forecasts", arr}});
  std::ostringstream csv;
  csv << csv_comment(meta);
  write_forecasts_csv(csv, forecasts);
  write_text(out_ / artifact::kForecastsCsv, csv.str());
  note(std::to_string(forecasts.size()) + " forecasts to " + std::to_string(config_.horizon));
  end();
}

void Pipeline::watchlist() {
  begin("watchlist");
  const auto series_j = read_artifact(artifact::kSeries, "ingest");
  const auto features_j = read_artifact(artifact::kFeaturesJson, "features");
  const auto anomalies_j = read_artifact(artifact::kAnomaliesJson, "detect-anomalies");
  const auto forecasts_j = read_artifact(artifact::kForecastsJson, "forecast");
  const auto segment_j = read_artifact(artifact::kSegmentModel, "segment");
  const auto series = series_set_from_json(series_j.at("series"));
  const auto vectors = load_vectors(features_j);

  WatchlistInputs in;
  {
    std::ifstream seg(out_ / artifact::kSegmentsCsv);
    if (!seg) {
      throw ConfigError("missing upstream artifact '" + (out_ / artifact::kSegmentsCsv).string() +
                        "'; run the 'segment' stage first");
    }
    for (const auto& r : read_segments_csv(seg)) in.segments[r.hs_code] = r.archetype;
  }
  in.signatures = detect_signature_codes(
      vectors, {config_.strong_price_decline, config_.strong_volume_growth});
  for (const auto& s : series) in.anomaly_years[s.hs_code];
  for (const auto& f : anomalies_j.at("flags")) {
    const auto flag = anomaly_flag_from_json(f);
    if (flag.is_anomaly) in.anomaly_years[flag.hs_code].push_back(flag.year);
  }
  for (const auto& f : forecasts_j.at("forecasts")) {
    auto fc = forecast_from_json(f);
    in.forecasts[fc.hs_code] = std::move(fc);
  }
  // Customs value: declared USD in the most recent observed year.
  in.duty.true_code = config_.true_code;
  for (const auto& s : series) {
    for (auto it = s.points.rbegin(); it != s.points.rend(); ++it) {
      if (it->origin == PointOrigin::kObserved) {
        in.duty.customs_value_usd[s.hs_code] = it->usd;
        break;
      }
    }
  }
  std::optional<BaselTable> basel;
  std::optional<TariffTable> tariffs;
  if (config_.basel_path) basel = BaselTable::load(*config_.basel_path);
  if (config_.tariff_path) tariffs = TariffTable::load(*config_.tariff_path);
  if (basel) in.basel = &*basel;
  if (tariffs) in.tariffs = &*tariffs;
  if (!(tariffs ? *tariffs : TariffTable::bundled()).lookup(config_.true_code))
    throw ConfigError("true code " + config_.true_code + " has no tariff row");
  const auto entries = build_watchlist(in);

  const auto meta = metadata_block(config_, "watchlist");
  write_json(artifact::kWatchlistJson, {{"schema_version", kSchemaVersion},
                                        {"metadata", meta},
                                        {"entries", watchlist_to_json(entries)}});
  std::ostringstream csv;
  csv << csv_comment(meta);
  write_watchlist_csv(csv, entries);
  write_text(out_ / artifact::kWatchlistCsv, csv.str());

  std::vector<ScatterPoint> scatter;
  for (const auto& v : vectors) {
    const auto it = in.segments.find(v.hs_code);
    scatter.push_back({v.hs_code, v.avg_price, v.avg_kg,
                       it == in.segments.end() ? std::nullopt : it->second});
  }
  write_text(out_ / artifact::kScatterSvg, render_segment_scatter_svg(scatter, svg_comment(meta)));

  // One chart per code carrying the signature.
  std::error_code ec;
  fs::remove_all(out_ / artifact::kChartsDir, ec);
  std::size_t charts = 0;
  for (const auto& e : entries) {
    if (!e.signature) continue;
    const auto s = std::find_if(series.begin(), series.end(),
                                [&](const AnnualSeries& a) { return a.hs_code == e.hs_code; });
    const auto& fc = in.forecasts.at(e.hs_code);
    write_text(out_ / artifact::kChartsDir / (e.hs_code + ".svg"),
               render_series_svg(*s, &fc, e.anomaly_years, svg_comment(meta)));
    ++charts;
  }
  std::size_t flagged = 0;
  for (const auto& e : entries) flagged += e.signature;
  note(std::to_string(entries.size()) + " entries, " + std::to_string(flagged) +
       " with signature, " + std::to_string(charts) + " charts");
  end();
}

void Pipeline::run_all(std::istream& input) {
  ingest(input);
  features();
  segment();
  detect_anomalies();
  train();
  evaluate();
  explain();
  forecast();
  watchlist();
}

}  // namespace scrapsig
