#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "scrapsig/anomaly.h"
#include "scrapsig/explain.h"
#include "scrapsig/features.h"
#include "scrapsig/ingest.h"
#include "scrapsig/risk.h"
#include "scrapsig/segment.h"
#include "scrapsig/trees.h"

namespace scrapsig {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const SeriesPoint& p);
SeriesPoint series_point_from_json(const Json& j);
Json to_json(const AnnualSeries& s);
AnnualSeries series_from_json(const Json& j);
Json to_json(const SeriesSet& set);
SeriesSet series_set_from_json(const Json& j);

Json to_json(const CleaningReport& r);

Json to_json(const FeatureVector& fv);
FeatureVector feature_vector_from_json(const Json& j);
Json to_json(const NormalizedMatrix& m);
NormalizedMatrix normalized_matrix_from_json(const Json& j);

// {k, feature_names, means, stds, centroids, seed, ...}
Json to_json(const KMeansModel& m, const NormalizedMatrix& normalization);
KMeansModel kmeans_from_json(const Json& j);

Json to_json(const AnomalyFlag& f);
AnomalyFlag anomaly_flag_from_json(const Json& j);

Json to_json(const DecisionTree& t, const std::vector<std::string>& feature_names);
DecisionTree tree_from_json(const Json& j);
Json to_json(const RandomForestModel& m);
RandomForestModel forest_from_json(const Json& j);
// FNV-1a over the canonical JSON dump.
std::string model_hash(const RandomForestModel& m);

Json to_json(const CVReport& r);

Json to_json(const ShapExplanation& e, const std::vector<std::string>& feature_names,
             const std::vector<std::string>& class_names);

Json to_json(const Forecast& f);
Forecast forecast_from_json(const Json& j);

Json to_json(const WatchlistEntry& e);
WatchlistEntry watchlist_entry_from_json(const Json& j);
Json watchlist_to_json(const std::vector<WatchlistEntry>& entries);
std::vector<WatchlistEntry> watchlist_from_json(const Json& j);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace scrapsig
