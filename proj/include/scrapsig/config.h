#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scrapsig/ingest.h"
#include "scrapsig/serialize.h"

namespace scrapsig {

// "[section]" headers, "key = value" lines, '#' or ';' comments.
class IniFile {
 public:
  static IniFile parse(std::istream& in, const std::string& origin = "config");
  static IniFile load(const std::string& path);

  // Keys are "section.key"; keys before any header live in section "run".
  const std::map<std::string, std::string>& values() const { return values_; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

 private:
  std::map<std::string, std::string> values_;
};

inline constexpr const char* kConfigEnvVar = "SCRAPSIG_CONFIG";

struct RunConfig {
  std::string input = "-";
  std::optional<std::string> labels;  // sidecar hs_code,label; default: segment archetypes
  std::string out = "run";
  std::uint64_t seed = 42;
  unsigned threads = 0;

  // ingest
  std::string preset = "default";
  ColumnMapping columns;
  char delimiter = ',';
  std::optional<int> first_year;
  std::optional<int> last_year;
  std::string flow = "import";  // import | export | all
  std::optional<std::string> reporter;
  bool aggregate = true;
  CleaningConfig cleaning;
  std::optional<std::string> cpi_path;

  // features
  std::string features = "full8";
  std::string segment_features = "full8";

  // segment
  std::size_t k = 4;
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;
  std::size_t elbow_k_min = 1;
  std::size_t elbow_k_max = 10;

  // anomaly
  std::string anomaly_mode = "per-code";
  double anomaly_threshold = 0.6;
  std::size_t iforest_trees = 100;
  std::size_t iforest_psi = 256;

  // forest
  std::size_t n_trees = 100;
  std::optional<std::size_t> features_per_split;
  std::optional<int> max_depth;
  std::size_t min_samples_split = 2;
  bool bootstrap = true;

  // evaluate
  std::size_t folds = 5;
  bool holdout = false;

  // explain
  std::string conditioning = "path-dependent";

  // risk
  int horizon = 2030;
  double strong_price_decline = 0.10;
  double strong_volume_growth = 0.10;
  std::string true_code = "3915";
  std::optional<std::string> basel_path;
  std::optional<std::string> tariff_path;

  // Applies "section.key" values; unknown keys raise ConfigError.
  void apply(const std::map<std::string, std::string>& values);
  void validate() const;

  // Reproducibility manifest. Omits the output directory and thread count,
  // neither of which affects results.
  Json to_json() const;
  std::string hash() const;
};

// Every artifact embeds this block.
Json metadata_block(const RunConfig& config, const std::string& stage);

}  // namespace scrapsig
