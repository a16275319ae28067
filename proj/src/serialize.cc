#include "scrapsig/serialize.h"

#include <cstdio>

#include "scrapsig/error.h"

namespace scrapsig {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json to_json(const SeriesPoint& p) {
  Json flags = Json::array();
  flags.push_back(p.origin == PointOrigin::kObserved ? "observed" : "interpolated");
  if (p.capped) flags.push_back("capped");
  Json j = {{"year", p.year}, {"kg", p.kg}, {"usd", p.usd}};
  j["unit_price"] = p.unit_price ? Json(*p.unit_price) : Json(nullptr);
  j["flags"] = flags;
  if (p.uncapped_unit_price) j["uncapped_unit_price"] = *p.uncapped_unit_price;
  return j;
}

SeriesPoint series_point_from_json(const Json& j) {
  SeriesPoint p;
  p.year = j.at("year").get<int>();
  p.kg = j.at("kg").get<double>();
  p.usd = j.at("usd").get<double>();
  if (!j.at("unit_price").is_null()) p.unit_price = j.at("unit_price").get<double>();
  for (const auto& f : j.at("flags")) {
    const auto s = f.get<std::string>();
    if (s == "interpolated") p.origin = PointOrigin::kInterpolated;
    if (s == "capped") p.capped = true;
  }
  if (j.contains("uncapped_unit_price")) p.uncapped_unit_price = j["uncapped_unit_price"].get<double>();
  return p;
}

Json to_json(const AnnualSeries& s) {
  Json pts = Json::array();
  for (const auto& p : s.points) pts.push_back(to_json(p));
  return {{"hs_code", s.hs_code}, {"points", pts}};
}

AnnualSeries series_from_json(const Json& j) {
  AnnualSeries s;
  s.hs_code = j.at("hs_code").get<std::string>();
  for (const auto& p : j.at("points")) s.points.push_back(series_point_from_json(p));
  return s;
}

Json to_json(const SeriesSet& set) {
  Json arr = Json::array();
  for (const auto& s : set) arr.push_back(to_json(s));
  return arr;
}

SeriesSet series_set_from_json(const Json& j) {
  SeriesSet out;
  for (const auto& s : j) out.push_back(series_from_json(s));
  return out;
}

Json to_json(const CleaningReport& r) {
  Json rejected = Json::array();
  for (const auto& row : r.rejected) rejected.push_back({{"line", row.line}, {"reason", row.reason}});
  Json dropped = Json::array();
  for (const auto& d : r.dropped)
    dropped.push_back({{"hs_code", d.hs_code}, {"missing_fraction", d.missing_fraction}});
  return {{"accepted_rows", r.accepted_rows},
          {"rejected_rows", r.rejected.size()},
          {"dropped_codes", r.dropped.size()},
          {"interpolated_points", r.interpolated_points},
          {"capped_points", r.capped_points},
          {"rejected", rejected},
          {"dropped", dropped},
          {"warnings", r.warnings}};
}

Json to_json(const FeatureVector& fv) {
  Json j = {{"hs_code", fv.hs_code}};
  for (auto name : kFeatureNames) j[std::string(name)] = fv.get(name);
  j["signature"] = signature_flag(fv);
  j["first_year"] = fv.first_year;
  j["span_years"] = fv.span_years;
  j["kg_intercept"] = fv.kg_intercept;
  j["price_intercept"] = fv.price_intercept;
  return j;
}

FeatureVector feature_vector_from_json(const Json& j) {
  FeatureVector fv;
  fv.hs_code = j.at("hs_code").get<std::string>();
  fv.avg_kg = j.at("avg_kg").get<double>();
  fv.avg_price = j.at("avg_price").get<double>();
  fv.price_volatility = j.at("price_volatility").get<double>();
  fv.kg_trend = j.at("kg_trend").get<double>();
  fv.price_trend = j.at("price_trend").get<double>();
  fv.volatility_x_price_trend = j.at("volatility_x_price_trend").get<double>();
  fv.log_avg_kg = j.at("log_avg_kg").get<double>();
  fv.log_avg_price = j.at("log_avg_price").get<double>();
  fv.first_year = j.at("first_year").get<int>();
  fv.span_years = j.at("span_years").get<int>();
  fv.kg_intercept = j.at("kg_intercept").get<double>();
  fv.price_intercept = j.at("price_intercept").get<double>();
  return fv;
}

Json to_json(const NormalizedMatrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"means", m.means}, {"stds", m.stds},
          {"values", m.values}};
}

NormalizedMatrix normalized_matrix_from_json(const Json& j) {
  NormalizedMatrix m;
  m.rows = j.at("rows").get<std::vector<std::string>>();
  m.cols = j.at("cols").get<std::vector<std::string>>();
  m.means = j.at("means").get<std::vector<double>>();
  m.stds = j.at("stds").get<std::vector<double>>();
  m.values = j.at("values").get<std::vector<std::vector<double>>>();
  return m;
}

Json to_json(const KMeansModel& m, const NormalizedMatrix& normalization) {
  return {{"k", m.k},
          {"feature_names", normalization.cols},
          {"means", normalization.means},
          {"stds", normalization.stds},
          {"centroids", m.centroids},
          {"seed", m.seed},
          {"n_init", m.n_init},
          {"iterations_run", m.iterations_run},
          {"inertia", m.inertia},
          {"labels", m.labels}};
}

KMeansModel kmeans_from_json(const Json& j) {
  KMeansModel m;
  m.k = j.at("k").get<std::size_t>();
  m.centroids = j.at("centroids").get<Matrix>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.n_init = j.value("n_init", 0);
  m.iterations_run = j.value("iterations_run", 0);
  m.inertia = j.value("inertia", 0.0);
  if (j.contains("labels")) m.labels = j["labels"].get<std::vector<std::size_t>>();
  return m;
}

Json to_json(const AnomalyFlag& f) {
  return {{"hs_code", f.hs_code}, {"year", f.year},          {"kg", f.observed_kg},
          {"score", f.score},     {"threshold", f.threshold_used}, {"is_anomaly", f.is_anomaly}};
}

AnomalyFlag anomaly_flag_from_json(const Json& j) {
  AnomalyFlag f;
  f.hs_code = j.at("hs_code").get<std::string>();
  f.year = j.at("year").get<int>();
  f.observed_kg = j.at("kg").get<double>();
  f.score = j.at("score").get<double>();
  f.threshold_used = j.at("threshold").get<double>();
  f.is_anomaly = j.at("is_anomaly").get<bool>();
  return f;
}

Json to_json(const DecisionTree& t, const std::vector<std::string>& feature_names) {
  Json nodes = Json::array();
  for (const auto& n : t.nodes) {
    Json j = {{"gini", n.gini}, {"n_samples", n.n_samples}, {"class_counts", n.class_counts},
              {"predicted_class", n.predicted_class}};
    if (!n.is_leaf()) {
      j["feature"] = n.feature;
      j["feature_name"] = n.feature < static_cast<int>(feature_names.size())
                              ? feature_names[n.feature]
                              : std::string();
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
    }
    nodes.push_back(std::move(j));
  }
  return {{"n_features", t.n_features}, {"n_classes", t.n_classes}, {"nodes", nodes}};
}

DecisionTree tree_from_json(const Json& j) {
  DecisionTree t;
  t.n_features = j.at("n_features").get<std::size_t>();
  t.n_classes = j.at("n_classes").get<std::size_t>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.gini = jn.at("gini").get<double>();
    n.n_samples = jn.at("n_samples").get<std::size_t>();
    n.class_counts = jn.at("class_counts").get<std::vector<double>>();
    n.predicted_class = jn.at("predicted_class").get<std::size_t>();
    if (jn.contains("feature")) {
      n.feature = jn["feature"].get<int>();
      n.threshold = jn["threshold"].get<double>();
      n.left = jn["left"].get<int>();
      n.right = jn["right"].get<int>();
    }
    t.nodes.push_back(std::move(n));
  }
  return t;
}

Json to_json(const RandomForestModel& m) {
  Json trees = Json::array();
  for (const auto& t : m.trees) trees.push_back(to_json(t, m.feature_names));
  Json opts = {{"n_trees", m.options.n_trees},
               {"seed", m.options.seed},
               {"bootstrap", m.options.bootstrap},
               {"min_samples_split", m.options.min_samples_split}};
  opts["features_per_split"] =
      m.options.features_per_split ? Json(*m.options.features_per_split) : Json(nullptr);
  opts["max_depth"] = m.options.max_depth ? Json(*m.options.max_depth) : Json(nullptr);
  return {{"feature_names", m.feature_names},
          {"class_names", m.class_names},
          {"options", opts},
          {"tree_seeds", m.tree_seeds},
          {"trees", trees}};
}

RandomForestModel forest_from_json(const Json& j) {
  RandomForestModel m;
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.class_names = j.at("class_names").get<std::vector<std::string>>();
  const auto& o = j.at("options");
  m.options.n_trees = o.at("n_trees").get<std::size_t>();
  m.options.seed = o.at("seed").get<std::uint64_t>();
  m.options.bootstrap = o.at("bootstrap").get<bool>();
  m.options.min_samples_split = o.at("min_samples_split").get<std::size_t>();
  if (!o.at("features_per_split").is_null())
    m.options.features_per_split = o["features_per_split"].get<std::size_t>();
  if (!o.at("max_depth").is_null()) m.options.max_depth = o["max_depth"].get<int>();
  m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
  for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
  return m;
}

std::string model_hash(const RandomForestModel& m) { return hex64(fnv1a64(to_json(m).dump())); }

namespace {

Json ms(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

Json metrics(const std::vector<ClassMetrics>& v) {
  Json arr = Json::array();
  for (const auto& c : v)
    arr.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                   {"support", c.support}});
  return arr;
}

}  // namespace

Json to_json(const CVReport& r) {
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"accuracy", f.accuracy},
                     {"confusion", f.confusion},
                     {"per_class", metrics(f.per_class)},
                     {"binary_accuracy", f.binary_accuracy},
                     {"binary_confusion", f.binary_confusion},
                     {"binary", metrics(f.binary)}});
  }
  Json per_class = Json::array();
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    per_class.push_back({{"class", r.class_names[c]},
                         {"high_risk", static_cast<bool>(r.class_is_high_risk[c])},
                         {"precision", ms(r.precision[c])},
                         {"recall", ms(r.recall[c])},
                         {"f1", ms(r.f1[c])}});
  }
  Json binary = Json::array();
  const char* names[] = {"high_risk", "low_risk"};
  for (std::size_t c = 0; c < 2 && c < r.binary_precision.size(); ++c) {
    binary.push_back({{"segment", names[c]},
                      {"precision", ms(r.binary_precision[c])},
                      {"recall", ms(r.binary_recall[c])},
                      {"f1", ms(r.binary_f1[c])}});
  }
  return {{"protocol", r.holdout ? "stratified-holdout" : "stratified-kfold"},
          {"folds_k", r.k},
          {"seed", r.seed},
          {"class_names", r.class_names},
          {"accuracy", ms(r.accuracy)},
          {"per_class", per_class},
          {"binary_accuracy", ms(r.binary_accuracy)},
          {"binary", binary},
          {"total_confusion", r.total_confusion},
          {"folds", folds}};
}

Json to_json(const ShapExplanation& e, const std::vector<std::string>& feature_names,
             const std::vector<std::string>& class_names) {
  Json contrib = Json::object();
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    Json per_class = Json::object();
    for (std::size_t c = 0; c < class_names.size(); ++c)
      per_class[class_names[c]] = e.contributions[i][c];
    contrib[feature_names[i]] = per_class;
  }
  Json base = Json::object();
  Json pred = Json::object();
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    base[class_names[c]] = e.base_value[c];
    pred[class_names[c]] = e.prediction[c];
  }
  return {{"base_value", base}, {"prediction", pred}, {"contributions", contrib}};
}

Json to_json(const Forecast& f) {
  Json pts = Json::array();
  for (const auto& p : f.points) {
    pts.push_back({{"year", p.year},
                   {"kg", p.kg},
                   {"price", p.price},
                   {"kg_floor_clamped", p.kg_floor_clamped},
                   {"price_floor_clamped", p.price_floor_clamped}});
  }
  return {{"hs_code", f.hs_code}, {"last_observed_year", f.last_observed_year}, {"points", pts}};
}

Forecast forecast_from_json(const Json& j) {
  Forecast f;
  f.hs_code = j.at("hs_code").get<std::string>();
  f.last_observed_year = j.at("last_observed_year").get<int>();
  for (const auto& p : j.at("points")) {
    ForecastPoint fp;
    fp.year = p.at("year").get<int>();
    fp.kg = p.at("kg").get<double>();
    fp.price = p.at("price").get<double>();
    fp.kg_floor_clamped = p.at("kg_floor_clamped").get<bool>();
    fp.price_floor_clamped = p.at("price_floor_clamped").get<bool>();
    f.points.push_back(fp);
  }
  return f;
}

Json to_json(const WatchlistEntry& e) {
  Json fc = Json::array();
  for (const auto& p : e.forecast) {
    fc.push_back({{"year", p.year},
                  {"kg", p.kg},
                  {"price", p.price},
                  {"kg_floor_clamped", p.kg_floor_clamped},
                  {"price_floor_clamped", p.price_floor_clamped}});
  }
  Json j = {{"risk_rank", e.risk_rank}, {"hs_code", e.hs_code}};
  j["archetype"] = e.archetype ? Json(std::string(to_string(*e.archetype))) : Json(nullptr);
  j["signature"] = e.signature;
  j["strong_signature"] = e.strong_signature;
  j["anomaly_years"] = e.anomaly_years;
  j["forecast"] = fc;
  j["basel"] = {{"y48", std::string(to_string(e.basel.y48))},
                {"a3210", e.basel.a3210},
                {"note", e.basel.note}};
  j["duty_gap_usd"] = {{"lo", e.duty_gap_usd.lo}, {"hi", e.duty_gap_usd.hi}};
  j["duty_note"] = e.duty_note;
  j["rank_keys"] = {{"signature", e.signature},
                    {"strong_signature", e.strong_signature},
                    {"anomaly_count", e.anomaly_years.size()},
                    {"high_risk_archetype", e.archetype && is_high_risk(*e.archetype)},
                    {"duty_gap_hi", e.duty_gap_usd.hi},
                    {"hs_code", e.hs_code}};
  return j;
}

WatchlistEntry watchlist_entry_from_json(const Json& j) {
  WatchlistEntry e;
  e.risk_rank = j.at("risk_rank").get<int>();
  e.hs_code = j.at("hs_code").get<std::string>();
  if (!j.at("archetype").is_null()) e.archetype = parse_archetype(j["archetype"].get<std::string>());
  e.signature = j.at("signature").get<bool>();
  e.strong_signature = j.at("strong_signature").get<bool>();
  e.anomaly_years = j.at("anomaly_years").get<std::vector<int>>();
  for (const auto& p : j.at("forecast")) {
    ForecastPoint fp;
    fp.year = p.at("year").get<int>();
    fp.kg = p.at("kg").get<double>();
    fp.price = p.at("price").get<double>();
    fp.kg_floor_clamped = p.at("kg_floor_clamped").get<bool>();
    fp.price_floor_clamped = p.at("price_floor_clamped").get<bool>();
    e.forecast.push_back(fp);
  }
  const auto& b = j.at("basel");
  e.basel.y48 = parse_basel_y48(b.at("y48").get<std::string>());
  e.basel.a3210 = b.at("a3210").get<bool>();
  e.basel.note = b.at("note").get<std::string>();
  e.duty_gap_usd.lo = j.at("duty_gap_usd").at("lo").get<double>();
  e.duty_gap_usd.hi = j.at("duty_gap_usd").at("hi").get<double>();
  e.duty_note = j.value("duty_note", "");
  return e;
}

Json watchlist_to_json(const std::vector<WatchlistEntry>& entries) {
  Json arr = Json::array();
  for (const auto& e : entries) arr.push_back(to_json(e));
  return arr;
}

std::vector<WatchlistEntry> watchlist_from_json(const Json& j) {
  std::vector<WatchlistEntry> out;
  for (const auto& e : j) out.push_back(watchlist_entry_from_json(e));
  return out;
}

}  // namespace scrapsig
