#include "scrapsig/synth.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "scrapsig/error.h"
#include "scrapsig/features.h"
#include "scrapsig/random.h"

namespace scrapsig {

void SeriesSpec::validate() const {
  if (!(base_kg > 0.0)) throw ConfigError("series spec " + hs_code + ": base_kg must be > 0");
  if (!(base_price > 0.0))
    throw ConfigError("series spec " + hs_code + ": base_price must be > 0");
  if (noise_sd_kg < 0.0 || noise_sd_price < 0.0)
    throw ConfigError("series spec " + hs_code + ": noise sds must be >= 0");
  if (last_year < first_year) throw ConfigError("series spec " + hs_code + ": empty years");
}

AnnualSeries generate_series(const SeriesSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  AnnualSeries s;
  s.hs_code = spec.hs_code;
  for (int y = spec.first_year; y <= spec.last_year; ++y) {
    const double t = y - spec.first_year;
    const double e_kg = spec.noise_sd_kg > 0.0 ? spec.noise_sd_kg * rng.normal() : 0.0;
    const double e_p = spec.noise_sd_price > 0.0 ? spec.noise_sd_price * rng.normal() : 0.0;
    const double kg = std::max(0.0, spec.base_kg + spec.kg_growth_per_year * t + e_kg);
    const double price =
        std::max(kSynthPriceFloor, spec.base_price + spec.price_drift_per_year * t + e_p);
    s.points.push_back(SeriesPoint::make(y, kg, kg * price));
  }
  return s;
}

std::map<int, double> ramp_schedule(int first_year, int last_year, double start, double end) {
  std::map<int, double> out;
  const int span = last_year - first_year;
  for (int y = first_year; y <= last_year; ++y) {
    out[y] = span == 0 ? end : start + (end - start) * (y - first_year) / span;
  }
  return out;
}

PoisonResult inject_misclassification(const AnnualSeries& virgin, const AnnualSeries& scrap,
                                      const PoisonSpec& spec) {
  if (virgin.years() != scrap.years())
    throw DataError("inject_misclassification: virgin " + virgin.hs_code + " and scrap " +
                    scrap.hs_code + " cover different years");
  if (spec.scrap_price < 0.0) throw ConfigError("scrap price must be >= 0");
  PoisonResult out{virgin, scrap};
  for (std::size_t i = 0; i < virgin.points.size(); ++i) {
    const int year = virgin.points[i].year;
    const auto it = spec.fraction_schedule.find(year);
    const double fraction = it == spec.fraction_schedule.end() ? 0.0 : it->second;
    if (fraction < 0.0 || fraction > 1.0)
      throw ConfigError("poison fraction for " + std::to_string(year) + " outside [0, 1]");
    if (fraction == 0.0) continue;
    const double moved_kg = fraction * scrap.points[i].kg;
    const double moved_usd = moved_kg * spec.scrap_price;
    const auto& v = virgin.points[i];
    const auto& s = scrap.points[i];
    if (s.usd - moved_usd < 0.0)
      throw DataError("inject_misclassification: scrap value for " + std::to_string(year) +
                      " cannot cover the moved mass at the declared scrap price");
    out.poisoned_virgin.points[i] = SeriesPoint::make(year, v.kg + moved_kg, v.usd + moved_usd);
    out.depleted_scrap.points[i] = SeriesPoint::make(year, s.kg - moved_kg, s.usd - moved_usd);
  }
  return out;
}

namespace {

struct Range {
  double lo, hi;
  double draw(Rng& rng) const { return lo + (hi - lo) * rng.uniform(); }
};

struct Template {
  Range base_kg, growth, base_price, drift;
  double noise_kg, noise_price;  // fractions of base
};

// Ordered as Archetype: HighVolumeCommodity, EmergingCommodity, StableMidMarket, HighPriceNiche.
const Template kArchetypeTemplates[kArchetypeCount] = {
    {{0.9e8, 1.1e8}, {-1.0e5, 1.0e5}, {0.98, 1.02}, {0.0, 0.002}, 0.005, 0.005},
    {{1.8e5, 2.2e5}, {6.4e5, 9.6e5}, {2.25, 2.75}, {0.0, 0.005}, 0.005, 0.005},
    {{0.9e7, 1.1e7}, {-1.0e4, 1.0e4}, {3.15, 3.85}, {0.4, 0.6}, 0.005, 0.005},
    {{0.9e7, 1.1e7}, {-1.2e5, -0.8e5}, {7.2, 8.8}, {-0.6, -0.4}, 0.005, 0.005},
};

std::string code_for(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "39%04zu", 1000 + index);
  return buf;
}

bool has_signature(const AnnualSeries& s) { return signature_flag(compute_features(s)); }

constexpr int kMaxRedraws = 200;

SeriesSpec draw_spec(const Template& t, const std::string& code, int first, int last,
                     Rng& rng) {
  SeriesSpec spec;
  spec.hs_code = code;
  spec.first_year = first;
  spec.last_year = last;
  spec.base_kg = t.base_kg.draw(rng);
  spec.kg_growth_per_year = t.growth.draw(rng);
  spec.base_price = t.base_price.draw(rng);
  spec.price_drift_per_year = t.drift.draw(rng);
  spec.noise_sd_kg = t.noise_kg * spec.base_kg;
  spec.noise_sd_price = t.noise_price * spec.base_price;
  return spec;
}

// Poisons a template series with a scrap pool until the signature shows.
AnnualSeries poisoned_series(const SeriesSpec& spec, std::uint64_t seed) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    SeriesSpec v = spec;
    v.seed = derive_seed(seed, 2 * attempt);
    SeriesSpec scrap = spec;
    scrap.hs_code = "391590";
    const double span = spec.last_year - spec.first_year;
    scrap.base_kg = 0.05 * std::max(spec.base_kg, spec.base_kg + span * spec.kg_growth_per_year);
    scrap.kg_growth_per_year = 0.0;
    scrap.base_price = 0.2 * spec.base_price;
    scrap.price_drift_per_year = 0.0;
    scrap.noise_sd_kg = 0.0;
    scrap.noise_sd_price = 0.0;
    scrap.seed = derive_seed(seed, 2 * attempt + 1);
    PoisonSpec poison{ramp_schedule(spec.first_year, spec.last_year, 0.0, 0.8),
                      scrap.base_price};
    auto out = inject_misclassification(generate_series(v), generate_series(scrap), poison);
    if (has_signature(out.poisoned_virgin)) return out.poisoned_virgin;
  }
  throw DataError("synth: could not realize an at-risk signature for " + spec.hs_code);
}

// Redraws noise until the series has no signature; falls back to noiseless.
AnnualSeries clean_series_for(SeriesSpec spec, std::uint64_t seed) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    spec.seed = derive_seed(seed, attempt);
    auto s = generate_series(spec);
    if (!has_signature(s)) return s;
  }
  spec.noise_sd_kg = 0.0;
  spec.noise_sd_price = 0.0;
  return generate_series(spec);
}

void sort_corpus(LabeledCorpus& c) {
  std::sort(c.series.begin(), c.series.end(),
            [](const AnnualSeries& a, const AnnualSeries& b) { return a.hs_code < b.hs_code; });
}

}  // namespace

LabeledCorpus generate_archetype_corpus(const ArchetypeCorpusOptions& options) {
  if (options.per_archetype < 1) throw ConfigError("archetype corpus needs >= 1 code per archetype");
  const std::size_t at_risk = options.at_risk_per_archetype.value_or(
      std::max<std::size_t>(1, options.per_archetype / 5));
  if (at_risk > options.per_archetype)
    throw ConfigError("at-risk count exceeds codes per archetype");
  LabeledCorpus corpus;
  for (std::size_t a = 0; a < kArchetypeCount; ++a)
    corpus.class_names.emplace_back(to_string(static_cast<Archetype>(a)));
  std::size_t index = 0;
  for (std::size_t a = 0; a < kArchetypeCount; ++a) {
    const auto archetype = static_cast<Archetype>(a);
    for (std::size_t i = 0; i < options.per_archetype; ++i, ++index) {
      const std::uint64_t code_seed = derive_seed(options.seed, index);
      Rng rng(code_seed);
      const std::string code = code_for(index);
      const auto spec = draw_spec(kArchetypeTemplates[a], code, options.first_year,
                                  options.last_year, rng);
      const bool risky = is_high_risk(archetype) && i < at_risk;
      corpus.series.push_back(risky ? poisoned_series(spec, derive_seed(code_seed, 1))
                                    : clean_series_for(spec, derive_seed(code_seed, 1)));
      corpus.labels[code] = a;
      if (risky) corpus.at_risk.insert(code);
    }
  }
  sort_corpus(corpus);
  return corpus;
}

LabeledCorpus generate_driver_corpus(Driver driver, std::size_t per_class, std::uint64_t seed) {
  if (per_class < 1) throw ConfigError("driver corpus needs >= 1 code per class");
  // Shared family: identical across classes.
  const Range shared_kg{2.0e6, 4.0e6}, shared_growth{-5.0e4, 5.0e4};
  const Range shared_price{2.0, 3.0}, shared_drift{-0.02, 0.02};
  const double price_drift_by_class[] = {-0.30, -0.10, 0.10, 0.30};
  const double price_noise_by_class[] = {0.01, 0.04, 0.01, 0.04};
  const double kg_by_class[] = {1.0e6, 4.0e6, 1.6e7, 6.4e7};
  const double growth_by_class[] = {-2.0e5, 0.0, 2.0e6, 8.0e6};

  LabeledCorpus corpus;
  for (std::size_t c = 0; c < 4; ++c) corpus.class_names.push_back("segment_" + std::to_string(c));
  std::size_t index = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++index) {
      Rng rng(derive_seed(seed, index));
      SeriesSpec spec;
      spec.hs_code = code_for(index);
      spec.seed = derive_seed(seed, 100000 + index);
      if (driver == Driver::kPrice) {
        spec.base_kg = shared_kg.draw(rng);
        spec.kg_growth_per_year = shared_growth.draw(rng);
        spec.base_price = shared_price.draw(rng);
        spec.price_drift_per_year = price_drift_by_class[c] * (0.9 + 0.2 * rng.uniform());
        spec.noise_sd_kg = 0.02 * spec.base_kg;
        spec.noise_sd_price = price_noise_by_class[c] * spec.base_price;
      } else {
        spec.base_kg = kg_by_class[c] * (0.9 + 0.2 * rng.uniform());
        spec.kg_growth_per_year = growth_by_class[c] * (0.9 + 0.2 * rng.uniform());
        spec.base_price = shared_price.draw(rng);
        spec.price_drift_per_year = shared_drift.draw(rng);
        spec.noise_sd_kg = 0.02 * spec.base_kg;
        spec.noise_sd_price = 0.02 * spec.base_price;
      }
      corpus.series.push_back(generate_series(spec));
      corpus.labels[spec.hs_code] = c;
    }
  }
  sort_corpus(corpus);
  return corpus;
}

LabeledCorpus generate_poisoning_corpus(const PoisoningCorpusOptions& o) {
  LabeledCorpus corpus;
  corpus.class_names = {"clean", "poisoned"};
  // Clean shapes: flat, rising price, shrinking volume and price, both rising.
  const double growth[] = {0.0, 0.0, -2000.0, 2000.0};
  const double drift[] = {0.0, 0.10, -0.05, 0.05};
  const std::size_t total = o.n_clean + o.n_poisoned;
  for (std::size_t index = 0; index < total; ++index) {
    Rng rng(derive_seed(o.seed, index));
    SeriesSpec spec;
    spec.hs_code = code_for(index);
    spec.first_year = o.first_year;
    spec.last_year = o.last_year;
    spec.base_kg = 100000.0 + 1000.0 * static_cast<double>(rng.below(50));
    spec.base_price = 5.0 + 0.25 * static_cast<double>(rng.below(8));
    spec.noise_sd_kg = o.noise_fraction * spec.base_kg;
    spec.noise_sd_price = o.noise_fraction * spec.base_price;
    spec.seed = derive_seed(o.seed, 100000 + index);
    if (index < o.n_clean) {
      spec.kg_growth_per_year = growth[index % 4];
      spec.price_drift_per_year = drift[index % 4];
      corpus.series.push_back(generate_series(spec));
      corpus.labels[spec.hs_code] = 0;
    } else {
      SeriesSpec scrap = spec;
      scrap.hs_code = "391590";
      scrap.base_kg = 100000.0;
      scrap.base_price = 0.5;
      scrap.noise_sd_kg = o.noise_fraction * scrap.base_kg;
      scrap.noise_sd_price = o.noise_fraction * scrap.base_price;
      scrap.seed = derive_seed(o.seed, 200000 + index);
      PoisonSpec poison{ramp_schedule(o.first_year, o.last_year, 0.0, o.ramp_end), 0.5};
      auto out = inject_misclassification(generate_series(spec), generate_series(scrap), poison);
      corpus.series.push_back(std::move(out.poisoned_virgin));
      corpus.labels[spec.hs_code] = 1;
      corpus.at_risk.insert(spec.hs_code);
    }
  }
  sort_corpus(corpus);
  return corpus;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void write_trade_csv(std::ostream& out, const SeriesSet& series) {
  out << "hs_code,year,flow,reporter,partner,value_usd,mass_kg\n";
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      out << s.hs_code << ',' << p.year << ",import,MY,WLD," << shortest(p.usd) << ','
          << shortest(p.kg) << '\n';
    }
  }
}

void write_labels_csv(std::ostream& out, const LabeledCorpus& corpus) {
  out << "hs_code,label,at_risk\n";
  for (const auto& s : corpus.series) {
    const auto label = corpus.labels.at(s.hs_code);
    out << s.hs_code << ',' << corpus.class_names[label] << ','
        << (corpus.at_risk.count(s.hs_code) ? "true" : "false") << '\n';
  }
}

}  // namespace scrapsig
