// scrapsig command-line front end.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "scrapsig/config.h"
#include "scrapsig/error.h"
#include "scrapsig/pipeline.h"
#include "scrapsig/synth.h"

namespace {

using Overrides = std::map<std::string, std::string>;

// Registers a flag whose value lands in overrides[key].
void opt(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help,
         Overrides& ov) {
  app->add_option_function<std::string>(
      flag, [&ov, key](const std::string& v) { ov[key] = v; }, help);
}

void switch_flag(CLI::App* app, const std::string& flag, const std::string& key,
                 const std::string& value, const std::string& help, Overrides& ov) {
  app->add_flag_callback(flag, [&ov, key, value] { ov[key] = value; }, help);
}

void common_options(CLI::App* app, Overrides& ov, std::string& config_path) {
  app->add_option("--config", config_path,
                  "INI config file (default: $" + std::string(scrapsig::kConfigEnvVar) + ")");
  opt(app, "--seed", "run.seed", "master seed", ov);
  opt(app, "--threads", "run.threads", "worker cap, 0 = all cores (never changes results)", ov);
  opt(app, "--out", "run.out", "run directory", ov);
}

void ingest_options(CLI::App* app, Overrides& ov) {
  opt(app, "--input,-i", "run.input", "trade CSV, '-' for stdin", ov);
  opt(app, "--preset", "ingest.preset", "column preset: default | comtrade", ov);
  opt(app, "--delimiter", "ingest.delimiter", "comma | tab | semicolon | pipe | <char>", ov);
  opt(app, "--first-year", "ingest.first_year", "analysis window start", ov);
  opt(app, "--last-year", "ingest.last_year", "analysis window end", ov);
  opt(app, "--flow", "ingest.flow", "import | export | all", ov);
  opt(app, "--reporter", "ingest.reporter", "keep one reporter", ov);
  switch_flag(app, "--no-aggregate", "ingest.aggregate", "false",
              "expect one row per code-year instead of summing", ov);
  opt(app, "--max-missing", "ingest.max_missing_fraction", "drop codes missing more years", ov);
  opt(app, "--max-gap", "ingest.max_interp_gap", "longest interior gap to interpolate", ov);
  opt(app, "--cap-lo", "ingest.cap_lo", "lower winsorization percentile", ov);
  opt(app, "--cap-hi", "ingest.cap_hi", "upper winsorization percentile", ov);
  opt(app, "--cap-scope", "ingest.cap_scope", "pooled | per-code", ov);
  opt(app, "--cpi", "ingest.cpi", "deflator CSV year,index", ov);
  opt(app, "--base-year", "ingest.base_year", "deflator base year", ov);
  for (const char* field :
       {"hs_code", "year", "flow", "reporter", "partner", "value_usd", "mass_kg"}) {
    std::string f = field;
    std::string flag = "--col-" + f;
    std::replace(flag.begin(), flag.end(), '_', '-');
    opt(app, flag, "ingest.col_" + f, "header name for " + f, ov);
  }
}

void features_options(CLI::App* app, Overrides& ov) {
  opt(app, "--features", "features.set", "full8 | primary5", ov);
}

void segment_options(CLI::App* app, Overrides& ov) {
  opt(app, "--k", "segment.k", "clusters", ov);
  opt(app, "--n-init", "segment.n_init", "k-means restarts", ov);
  opt(app, "--segment-features", "segment.features", "full8 | primary5", ov);
  opt(app, "--elbow-max", "segment.elbow_k_max", "largest k in the elbow scan", ov);
}

void anomaly_options(CLI::App* app, Overrides& ov) {
  opt(app, "--mode", "anomaly.mode", "per-code | pooled", ov);
  opt(app, "--threshold", "anomaly.threshold", "score threshold", ov);
  opt(app, "--anomaly-trees", "anomaly.n_trees", "isolation trees", ov);
  opt(app, "--psi", "anomaly.psi", "subsample size", ov);
}

void forest_options(CLI::App* app, Overrides& ov) {
  opt(app, "--labels", "run.labels", "hs_code,label CSV (default: segment archetypes)", ov);
  opt(app, "--trees", "forest.n_trees", "random forest size", ov);
  opt(app, "--max-depth", "forest.max_depth", "tree depth cap", ov);
  opt(app, "--mtry", "forest.features_per_split", "features per split: sqrt | all | <n>", ov);
  opt(app, "--min-samples-split", "forest.min_samples_split", "smallest splittable node", ov);
}

void evaluate_options(CLI::App* app, Overrides& ov) {
  opt(app, "--folds", "evaluate.folds", "stratified folds", ov);
  switch_flag(app, "--holdout", "evaluate.holdout", "true", "single stratified 75/25 split", ov);
}

void explain_options(CLI::App* app, Overrides& ov) {
  opt(app, "--conditioning", "explain.conditioning", "path-dependent | interventional", ov);
}

void forecast_options(CLI::App* app, Overrides& ov) {
  opt(app, "--horizon", "risk.horizon", "last forecast year", ov);
}

void watchlist_options(CLI::App* app, Overrides& ov) {
  opt(app, "--true-code", "risk.true_code", "code the goods really belong to", ov);
  opt(app, "--basel", "risk.basel", "Basel mapping CSV (default: bundled)", ov);
  opt(app, "--tariffs", "risk.tariffs", "tariff CSV (default: bundled)", ov);
  opt(app, "--strong-price", "risk.strong_price_decline", "strong-signature price decline", ov);
  opt(app, "--strong-volume", "risk.strong_volume_growth", "strong-signature volume growth", ov);
}

scrapsig::RunConfig build_config(const std::string& config_path, const Overrides& ov) {
  scrapsig::RunConfig cfg;
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(scrapsig::kConfigEnvVar)) path = env;
  }
  if (!path.empty()) cfg.apply(scrapsig::IniFile::load(path).values());
  cfg.apply(ov);
  return cfg;
}

struct SynthArgs {
  std::string kind = "archetype";
  std::size_t per_archetype = 32;
  std::size_t clean = 40;
  std::size_t poisoned = 10;
  double noise = 0.0;
  std::uint64_t seed = 42;
  std::string out = "-";
  std::string labels_out;
  int first_year = 2020;
  int last_year = 2024;
};

int run_synth(const SynthArgs& a) {
  scrapsig::LabeledCorpus corpus;
  if (a.kind == "archetype") {
    scrapsig::ArchetypeCorpusOptions o;
    o.per_archetype = a.per_archetype;
    o.seed = a.seed;
    o.first_year = a.first_year;
    o.last_year = a.last_year;
    corpus = scrapsig::generate_archetype_corpus(o);
  } else if (a.kind == "poisoning") {
    scrapsig::PoisoningCorpusOptions o;
    o.n_clean = a.clean;
    o.n_poisoned = a.poisoned;
    o.noise_fraction = a.noise;
    o.seed = a.seed;
    o.first_year = a.first_year;
    o.last_year = a.last_year;
    corpus = scrapsig::generate_poisoning_corpus(o);
  } else if (a.kind == "driver-price" || a.kind == "driver-volume") {
    corpus = scrapsig::generate_driver_corpus(
        a.kind == "driver-price" ? scrapsig::Driver::kPrice : scrapsig::Driver::kVolume,
        a.per_archetype, a.seed);
  } else {
    throw scrapsig::ConfigError("unknown synth kind '" + a.kind + "'");
  }
  if (a.out == "-") {
    scrapsig::write_trade_csv(std::cout, corpus.series);
    std::cout.flush();
  } else {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw scrapsig::DataError("cannot write '" + a.out + "'");
    scrapsig::write_trade_csv(out, corpus.series);
  }
  if (!a.labels_out.empty()) {
    std::ofstream out(a.labels_out, std::ios::binary);
    if (!out) throw scrapsig::DataError("cannot write '" + a.labels_out + "'");
    scrapsig::write_labels_csv(out, corpus);
  }
  std::cerr << "[synth] " << corpus.series.size() << " codes, " << corpus.at_risk.size()
            << " injected\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scrapsig: inverse price-volume signature analytics for trade data"};
  app.require_subcommand(1);
  Overrides ov;
  std::string config_path;

  auto* ingest = app.add_subcommand("ingest", "parse, aggregate and clean trade rows");
  auto* features = app.add_subcommand("features", "compute per-code features");
  auto* segment = app.add_subcommand("segment", "k-means segmentation and elbow scan");
  auto* anomalies = app.add_subcommand("detect-anomalies", "isolation-forest year flags");
  auto* train = app.add_subcommand("train", "fit the random forest");
  auto* evaluate = app.add_subcommand("evaluate", "stratified cross-validation");
  auto* explain = app.add_subcommand("explain", "exact Shapley attributions");
  auto* forecast = app.add_subcommand("forecast", "linear projections to the horizon");
  auto* watchlist = app.add_subcommand("watchlist", "ranked watchlist and charts");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage in order");
  auto* synth = app.add_subcommand("synth", "write a synthetic trade corpus");

  for (auto* sub : {ingest, features, segment, anomalies, train, evaluate, explain, forecast,
                    watchlist, pipeline}) {
    common_options(sub, ov, config_path);
  }
  ingest_options(ingest, ov);
  features_options(features, ov);
  segment_options(segment, ov);
  anomaly_options(anomalies, ov);
  forest_options(train, ov);
  forest_options(evaluate, ov);
  evaluate_options(evaluate, ov);
  explain_options(explain, ov);
  forecast_options(forecast, ov);
  watchlist_options(watchlist, ov);
  ingest_options(pipeline, ov);
  features_options(pipeline, ov);
  segment_options(pipeline, ov);
  anomaly_options(pipeline, ov);
  forest_options(pipeline, ov);
  evaluate_options(pipeline, ov);
  explain_options(pipeline, ov);
  forecast_options(pipeline, ov);
  watchlist_options(pipeline, ov);

  SynthArgs sa;
  synth->add_option("--kind", sa.kind, "archetype | poisoning | driver-price | driver-volume");
  synth->add_option("--archetypes", sa.per_archetype, "codes per archetype (or per driver class)");
  synth->add_option("--clean", sa.clean, "clean codes (poisoning corpus)");
  synth->add_option("--poisoned", sa.poisoned, "poisoned codes (poisoning corpus)");
  synth->add_option("--noise", sa.noise, "noise sd as a fraction of base (poisoning corpus)");
  synth->add_option("--seed", sa.seed, "generator seed");
  synth->add_option("--out", sa.out, "trade CSV path, '-' for stdout");
  synth->add_option("--labels-out", sa.labels_out, "ground-truth sidecar CSV");
  synth->add_option("--first-year", sa.first_year, "first year");
  synth->add_option("--last-year", sa.last_year, "last year");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_synth(sa);
    const auto cfg = build_config(config_path, ov);
    scrapsig::Pipeline p(cfg, std::cerr);
    auto with_input = [&](auto&& fn) {
      if (cfg.input == "-") return fn(std::cin);
      std::ifstream in(cfg.input, std::ios::binary);
      if (!in) throw scrapsig::ConfigError("cannot open input '" + cfg.input + "'");
      return fn(in);
    };
    if (ingest->parsed()) with_input([&](std::istream& in) { p.ingest(in); });
    else if (features->parsed()) p.features();
    else if (segment->parsed()) p.segment();
    else if (anomalies->parsed()) p.detect_anomalies();
    else if (train->parsed()) p.train();
    else if (evaluate->parsed()) p.evaluate(&std::cout);
    else if (explain->parsed()) p.explain();
    else if (forecast->parsed()) p.forecast();
    else if (watchlist->parsed()) p.watchlist();
    else if (pipeline->parsed()) with_input([&](std::istream& in) { p.run_all(in); });
    return 0;
  } catch (const scrapsig::ConfigError& e) {
    std::cerr << "scrapsig: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const scrapsig::DataError& e) {
    std::cerr << "scrapsig: data error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "scrapsig: data error: " << e.what() << '\n';
    return 1;
  }
}
