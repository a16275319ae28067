#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "scrapsig/anomaly.h"
#include "scrapsig/explain.h"
#include "scrapsig/features.h"
#include "scrapsig/risk.h"
#include "scrapsig/segment.h"
#include "scrapsig/serialize.h"

namespace scrapsig {

// CSV artifacts open with one "# key=value ..." metadata line.
void write_csv_metadata(std::ostream& out, const Json& metadata);

// Shortest round-trip decimal.
std::string format_double(double v);
std::string csv_escape(std::string_view field);

void write_features_csv(std::ostream& out, const std::vector<FeatureVector>& vectors,
                        const std::vector<std::string>& feature_names);

struct SegmentRow {
  std::string hs_code;
  std::size_t cluster = 0;
  std::optional<Archetype> archetype;
};

void write_segments_csv(std::ostream& out, const std::vector<SegmentRow>& rows);
std::vector<SegmentRow> read_segments_csv(std::istream& in);

void write_anomalies_csv(std::ostream& out, const std::vector<AnomalyFlag>& flags);

// feature,class,mean_abs_shap; class "overall" holds the sum over classes.
void write_shap_csv(std::ostream& out, const ShapSummary& summary);

void write_forecasts_csv(std::ostream& out, const std::vector<Forecast>& forecasts);

// Fixed column set documented in docs/FORMATS.md.
void write_watchlist_csv(std::ostream& out, const std::vector<WatchlistEntry>& entries);

// hs_code,label[,...] sidecar; extra columns ignored.
std::map<std::string, std::string> read_labels_csv(std::istream& in);

}  // namespace scrapsig
