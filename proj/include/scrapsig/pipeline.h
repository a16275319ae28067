#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "scrapsig/config.h"

namespace scrapsig {

// Stage artifacts inside the run directory.
namespace artifact {
inline constexpr const char* kSeries = "series.json";
inline constexpr const char* kCleaningReport = "cleaning_report.json";
inline constexpr const char* kFeaturesJson = "features.json";
inline constexpr const char* kFeaturesCsv = "features.csv";
inline constexpr const char* kSegmentModel = "segment_model.json";
inline constexpr const char* kSegmentsCsv = "segments.csv";
inline constexpr const char* kAnomaliesJson = "anomalies.json";
inline constexpr const char* kAnomaliesCsv = "anomalies.csv";
inline constexpr const char* kForest = "forest.json";
inline constexpr const char* kCvReportJson = "cv_report.json";
inline constexpr const char* kCvReportTxt = "cv_report.txt";
inline constexpr const char* kShapJson = "shap.json";
inline constexpr const char* kShapCsv = "shap_summary.csv";
inline constexpr const char* kShapSvg = "shap_bars.svg";
inline constexpr const char* kForecastsJson = "forecasts.json";
inline constexpr const char* kForecastsCsv = "forecasts.csv";
inline constexpr const char* kWatchlistJson = "watchlist.json";
inline constexpr const char* kWatchlistCsv = "watchlist.csv";
inline constexpr const char* kScatterSvg = "segments_scatter.svg";
inline constexpr const char* kChartsDir = "charts";
}  // namespace artifact

// Stage messages go to `log`; every stage also leaves logs/<stage>.log.
class Pipeline {
 public:
  Pipeline(RunConfig config, std::ostream& log);

  void ingest(std::istream& input);
  void features();
  void segment();
  void detect_anomalies();
  void train();
  // Writes the formatted table to `table` as well as cv_report.txt.
  void evaluate(std::ostream* table = nullptr);
  void explain();
  void forecast();
  void watchlist();
  void run_all(std::istream& input);

  const RunConfig& config() const { return config_; }
  std::filesystem::path path(const char* file) const { return out_ / file; }

 private:
  Json read_artifact(const char* file, const char* producer) const;
  void write_json(const char* file, const Json& j) const;
  void write_text(const std::filesystem::path& file, const std::string& text) const;
  void begin(const char* stage);
  void note(const std::string& message);
  void end();

  RunConfig config_;
  std::filesystem::path out_;
  std::ostream& log_;
  std::string stage_;
  std::string stage_log_;
};

}  // namespace scrapsig
