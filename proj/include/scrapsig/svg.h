#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scrapsig/explain.h"
#include "scrapsig/features.h"
#include "scrapsig/ingest.h"
#include "scrapsig/risk.h"
#include "scrapsig/segment.h"

namespace scrapsig {

// Volume (left axis) and unit price (right axis) over the observed years.
// The projection is drawn as a single dashed path whose subpaths start at the
// last observed year; anomaly years get circle markers on the volume line.
std::string render_series_svg(const AnnualSeries& series, const Forecast* forecast,
                              const std::vector<int>& anomaly_years,
                              const std::string& comment = {});

struct ScatterPoint {
  std::string hs_code;
  double avg_price = 0.0;
  double avg_kg = 0.0;
  std::optional<Archetype> archetype;
};

// avg_price vs avg_kg on log-log axes, coloured by archetype.
std::string render_segment_scatter_svg(const std::vector<ScatterPoint>& points,
                                       const std::string& comment = {});

// Horizontal bars of mean |SHAP| per feature, stacked by class.
std::string render_shap_bars_svg(const ShapSummary& summary, const std::string& comment = {});

std::string xml_escape(std::string_view text);

}  // namespace scrapsig
