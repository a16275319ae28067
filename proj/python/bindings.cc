#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scrapsig/error.h"
#include "scrapsig/explain.h"
#include "scrapsig/features.h"
#include "scrapsig/risk.h"
#include "scrapsig/segment.h"
#include "scrapsig/synth.h"
#include "scrapsig/trees.h"

namespace py = pybind11;
using namespace scrapsig;

namespace {

AnnualSeries make_series(const std::string& code, const std::vector<int>& years,
                         const std::vector<double>& kg, const std::vector<double>& usd) {
  if (years.size() != kg.size() || years.size() != usd.size())
    throw DataError("years, kg and usd must have equal length");
  AnnualSeries s;
  s.hs_code = code;
  for (std::size_t i = 0; i < years.size(); ++i)
    s.points.push_back(SeriesPoint::make(years[i], kg[i], usd[i]));
  return s;
}

py::dict feature_dict(const FeatureVector& fv) {
  py::dict d;
  d["hs_code"] = fv.hs_code;
  for (const auto& n : all_feature_names()) d[py::str(n)] = fv.get(n);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "scrapsig C++ core";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<Archetype>(m, "Archetype")
      .value("HighVolumeCommodity", Archetype::kHighVolumeCommodity)
      .value("EmergingCommodity", Archetype::kEmergingCommodity)
      .value("StableMidMarket", Archetype::kStableMidMarket)
      .value("HighPriceNiche", Archetype::kHighPriceNiche);

  m.def("feature_names", [](const std::string& set) { return feature_set(set); },
        py::arg("set") = "full8");
  m.def("ols_slope", [](const std::vector<double>& x, const std::vector<double>& y) {
    return ols_slope(x, y);
  });

  py::class_<FeatureVector>(m, "FeatureVector")
      .def_readonly("hs_code", &FeatureVector::hs_code)
      .def("get", &FeatureVector::get)
      .def("as_dict", &feature_dict)
      .def_property_readonly("signature", [](const FeatureVector& f) { return signature_flag(f); });

  m.def("compute_features",
        [](const std::string& code, const std::vector<int>& years, const std::vector<double>& kg,
           const std::vector<double>& usd) { return compute_features(make_series(code, years, kg, usd)); },
        py::arg("hs_code"), py::arg("years"), py::arg("kg"), py::arg("usd"));

  m.def("zscore",
        [](const std::vector<FeatureVector>& v, const std::string& set) {
          return zscore_normalize(v, feature_set(set)).values;
        },
        py::arg("vectors"), py::arg("set") = "full8");

  py::class_<SignatureResult>(m, "SignatureResult")
      .def_readonly("hs_code", &SignatureResult::hs_code)
      .def_readonly("signature", &SignatureResult::signature)
      .def_readonly("strong_signature", &SignatureResult::strong_signature)
      .def_readonly("price_change", &SignatureResult::price_change)
      .def_readonly("volume_change", &SignatureResult::volume_change);
  m.def("detect_signature_codes",
        [](const std::vector<FeatureVector>& v) { return detect_signature_codes(v); });

  py::class_<DilutionResult>(m, "DilutionResult")
      .def_readonly("total_kg", &DilutionResult::total_kg)
      .def_readonly("declared_value", &DilutionResult::declared_value)
      .def_readonly("actual_value", &DilutionResult::actual_value)
      .def_readonly("blended_price", &DilutionResult::blended_price)
      .def_readonly("overstatement_usd", &DilutionResult::overstatement_usd)
      .def_readonly("overstatement_fraction", &DilutionResult::overstatement_fraction);
  m.def("dilution_model",
        [](std::int64_t n, std::int64_t poisoned, double kg, double price, double scrap) {
          return dilution_model({n, poisoned, kg, price, scrap});
        },
        py::arg("n_containers"), py::arg("n_poisoned"), py::arg("kg_per_container"),
        py::arg("declared_price"), py::arg("scrap_price"));

  m.def("duty_gap",
        [](const std::string& declared, const std::string& truth, double value) {
          auto g = duty_gap(declared, truth, value);
          return std::make_pair(g.lo, g.hi);
        },
        py::arg("declared_code"), py::arg("true_code"), py::arg("customs_value_usd"));

  m.def("basel_overlap", [](const std::string& code) {
    auto b = basel_overlap(code);
    py::dict d;
    d["y48"] = std::string(to_string(b.y48));
    d["a3210"] = b.a3210;
    d["note"] = b.note;
    return d;
  });

  py::class_<Forecast>(m, "Forecast")
      .def_readonly("hs_code", &Forecast::hs_code)
      .def_readonly("last_observed_year", &Forecast::last_observed_year)
      .def_property_readonly("points", [](const Forecast& f) {
        py::list out;
        for (const auto& p : f.points) out.append(py::make_tuple(p.year, p.kg, p.price));
        return out;
      });
  m.def("forecast_linear",
        [](const std::string& code, const std::vector<int>& years, const std::vector<double>& kg,
           const std::vector<double>& usd, int horizon) {
          return forecast_linear(make_series(code, years, kg, usd), horizon);
        },
        py::arg("hs_code"), py::arg("years"), py::arg("kg"), py::arg("usd"),
        py::arg("horizon") = 2030);

  m.def("kmeans_fit",
        [](const Matrix& x, std::size_t k, std::uint64_t seed) {
          auto r = kmeans_fit(x, {.k = k, .seed = seed});
          return py::make_tuple(r.labels, r.centroids, r.inertia);
        },
        py::arg("x"), py::arg("k"), py::arg("seed") = 42);
  m.def("elbow_scan",
        [](const Matrix& x, std::size_t k_min, std::size_t k_max, std::uint64_t seed) {
          auto r = elbow_scan(x, k_min, k_max, {.seed = seed});
          return py::make_tuple(r.curve, r.recommended_k);
        },
        py::arg("x"), py::arg("k_min") = 1, py::arg("k_max") = 10, py::arg("seed") = 42);

  py::class_<RandomForestModel>(m, "RandomForest")
      .def(py::init([](const Matrix& x, const std::vector<std::size_t>& y,
                       const std::vector<std::string>& features,
                       const std::vector<std::string>& classes, std::size_t n_trees,
                       std::uint64_t seed) {
             return forest_fit(x, y, features, classes, {.n_trees = n_trees, .seed = seed});
           }),
           py::arg("x"), py::arg("y"), py::arg("feature_names"), py::arg("class_names"),
           py::arg("n_trees") = 100, py::arg("seed") = 42)
      .def("predict", [](const RandomForestModel& f, const std::vector<double>& row) {
        return predict(f, row);
      })
      .def("predict_proba", [](const RandomForestModel& f, const std::vector<double>& row) {
        return predict_proba(f, row);
      })
      .def("shap", [](const RandomForestModel& f, const std::vector<double>& row) {
        auto e = shapley_values(f, row);
        return py::make_tuple(e.base_value, e.contributions);
      });

  m.def("mean_abs_shap", [](const RandomForestModel& f, const Matrix& x) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& fi : mean_abs_shap(f, x).overall) out.emplace_back(fi.feature, fi.mean_abs);
    return out;
  });

  // Returns (trade_csv, labels_csv) text for the named corpus.
  m.def("synth_corpus",
        [](const std::string& kind, std::size_t size, std::uint64_t seed) {
          LabeledCorpus c;
          if (kind == "archetype") c = generate_archetype_corpus({.per_archetype = size, .seed = seed});
          else if (kind == "poisoning") c = generate_poisoning_corpus({.seed = seed});
          else if (kind == "driver-price") c = generate_driver_corpus(Driver::kPrice, size, seed);
          else if (kind == "driver-volume") c = generate_driver_corpus(Driver::kVolume, size, seed);
          else throw ConfigError("unknown corpus kind '" + kind + "'");
          std::ostringstream trade, labels;
          write_trade_csv(trade, c.series);
          write_labels_csv(labels, c);
          return py::make_tuple(trade.str(), labels.str());
        },
        py::arg("kind") = "archetype", py::arg("size") = 32, py::arg("seed") = 42);
}
