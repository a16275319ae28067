#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "scrapsig/ingest.h"
#include "scrapsig/segment.h"

namespace scrapsig {

struct SeriesSpec {
  std::string hs_code;
  int first_year = 2020;
  int last_year = 2024;
  double base_kg = 1.0;
  double kg_growth_per_year = 0.0;
  double base_price = 1.0;
  double price_drift_per_year = 0.0;
  double noise_sd_kg = 0.0;
  double noise_sd_price = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kSynthPriceFloor = 0.01;

// kg(t) = base + growth t + e, price(t) = max(0.01, base + drift t + e),
// usd = kg price, with t = year - first_year. kg is floored at 0.
AnnualSeries generate_series(const SeriesSpec& spec);

struct PoisonSpec {
  std::map<int, double> fraction_schedule;  // year -> share of scrap kg moved
  double scrap_price = 0.0;                 // declared USD/kg of moved mass
};

struct PoisonResult {
  AnnualSeries poisoned_virgin;
  AnnualSeries depleted_scrap;
};

// Per year moves fraction x scrap kg from scrap into virgin, carrying
// moved_kg x scrap_price of declared value with it. Mass and value are
// conserved across the pair. Throws DataError on misaligned years.
PoisonResult inject_misclassification(const AnnualSeries& virgin, const AnnualSeries& scrap,
                                      const PoisonSpec& spec);

// Linear ramp of fractions from `start` to `end` over the given years.
std::map<int, double> ramp_schedule(int first_year, int last_year, double start, double end);

struct ArchetypeCorpusOptions {
  std::size_t per_archetype = 32;
  std::uint64_t seed = 0;
  int first_year = 2020;
  int last_year = 2024;
  // At-risk codes per commodity archetype; nullopt = max(1, per_archetype / 5).
  std::optional<std::size_t> at_risk_per_archetype;
};

struct LabeledCorpus {
  SeriesSet series;                               // sorted by hs_code
  std::map<std::string, std::size_t> labels;      // hs_code -> class id
  std::vector<std::string> class_names;
  std::set<std::string> at_risk;                  // codes carrying an injected signature
};

// Four Table-4-style templates; class ids follow the Archetype enum order.
LabeledCorpus generate_archetype_corpus(const ArchetypeCorpusOptions& options);

enum class Driver { kPrice, kVolume };

// Four segments separated only by price dynamics (kPrice) or only by volume
// level and growth (kVolume); the other feature family is identically
// distributed across segments.
LabeledCorpus generate_driver_corpus(Driver driver, std::size_t per_class, std::uint64_t seed);

struct PoisoningCorpusOptions {
  std::size_t n_clean = 40;
  std::size_t n_poisoned = 10;
  double noise_fraction = 0.0;  // noise sd as a fraction of base kg / price
  double ramp_end = 0.4;
  std::uint64_t seed = 0;
  int first_year = 2020;
  int last_year = 2024;
};

// Clean codes never carry the signature without noise; poisoned codes are
// flat virgin series receiving a 0 -> ramp_end share of a scrap series.
LabeledCorpus generate_poisoning_corpus(const PoisoningCorpusOptions& options);

// Writes the ingest CSV layout (default column mapping), one import row per
// code-year, reporter MY, partner WLD.
void write_trade_csv(std::ostream& out, const SeriesSet& series);

// hs_code,label,at_risk sidecar.
void write_labels_csv(std::ostream& out, const LabeledCorpus& corpus);

}  // namespace scrapsig
