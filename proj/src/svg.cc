#include "scrapsig/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace scrapsig {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 80.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label_num(double v) {
  char buf[32];
  const double a = std::fabs(v);
  if (a >= 1e9) std::snprintf(buf, sizeof buf, "%.3gG", v / 1e9);
  else if (a >= 1e6) std::snprintf(buf, sizeof buf, "%.3gM", v / 1e6);
  else if (a >= 1e3) std::snprintf(buf, sizeof buf, "%.3gk", v / 1e3);
  else std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Scale {
  double lo, hi, out_lo, out_hi;
  double operator()(double v) const {
    if (hi == lo) return 0.5 * (out_lo + out_hi);
    return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
  }
};

void open_svg(std::ostringstream& os, const std::string& comment, const std::string& title) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) os << "<!-- " << comment << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
     << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
}

void frame(std::ostringstream& os) {
  os << "<rect class=\"frame\" x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
     << num(kWidth - kLeft - kRight) << "\" height=\"" << num(kHeight - kTop - kBottom)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
}

void padded(double& lo, double& hi) {
  if (hi == lo) {
    const double d = lo == 0.0 ? 1.0 : std::fabs(lo) * 0.1;
    lo -= d;
    hi += d;
    return;
  }
  const double d = 0.05 * (hi - lo);
  lo -= d;
  hi += d;
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_series_svg(const AnnualSeries& series, const Forecast* forecast,
                              const std::vector<int>& anomaly_years,
                              const std::string& comment) {
  std::ostringstream os;
  open_svg(os, comment, "HS " + series.hs_code + ": volume and unit price");
  frame(os);
  if (series.points.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  int y0 = series.points.front().year;
  int y1 = series.points.back().year;
  double kg_lo = std::numeric_limits<double>::infinity(), kg_hi = -kg_lo;
  double p_lo = kg_lo, p_hi = -kg_lo;
  auto widen = [](double v, double& lo, double& hi) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const auto& p : series.points) {
    widen(p.kg, kg_lo, kg_hi);
    if (p.unit_price) widen(*p.unit_price, p_lo, p_hi);
  }
  if (forecast) {
    for (const auto& p : forecast->points) {
      y1 = std::max(y1, p.year);
      widen(p.kg, kg_lo, kg_hi);
      widen(p.price, p_lo, p_hi);
    }
  }
  if (p_lo > p_hi) p_lo = p_hi = 0.0;
  padded(kg_lo, kg_hi);
  padded(p_lo, p_hi);
  const Scale sx{static_cast<double>(y0), static_cast<double>(y1 == y0 ? y0 + 1 : y1), kLeft,
                 kWidth - kRight};
  const Scale sk{kg_lo, kg_hi, kHeight - kBottom, kTop};
  const Scale sp{p_lo, p_hi, kHeight - kBottom, kTop};

  // Axes: years along the bottom, kg on the left, price on the right.
  for (int y = y0; y <= y1; ++y) {
    os << "<text x=\"" << num(sx(y)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">" << y << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double vk = kg_lo + (kg_hi - kg_lo) * i / 4.0;
    const double vp = p_lo + (p_hi - p_lo) * i / 4.0;
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sk(vk) + 4)
       << "\" text-anchor=\"end\" fill=\"" << kPalette[0] << "\">" << label_num(vk)
       << "</text>\n";
    os << "<text x=\"" << num(kWidth - kRight + 6) << "\" y=\"" << num(sp(vp) + 4)
       << "\" fill=\"" << kPalette[1] << "\">" << label_num(vp) << "</text>\n";
  }
  os << "<text x=\"20\" y=\"" << num(kHeight / 2) << "\" transform=\"rotate(-90 20 "
     << num(kHeight / 2) << ")\" text-anchor=\"middle\" fill=\"" << kPalette[0]
     << "\">volume (kg)</text>\n";
  os << "<text x=\"" << num(kWidth - 16) << "\" y=\"" << num(kHeight / 2) << "\" transform=\"rotate(90 "
     << num(kWidth - 16) << ' ' << num(kHeight / 2) << ")\" text-anchor=\"middle\" fill=\""
     << kPalette[1] << "\">unit price (USD/kg)</text>\n";

  os << "<polyline class=\"observed-kg\" fill=\"none\" stroke=\"" << kPalette[0]
     << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const auto& p = series.points[i];
    os << (i ? " " : "") << num(sx(p.year)) << ',' << num(sk(p.kg));
  }
  os << "\"/>\n";
  os << "<polyline class=\"observed-price\" fill=\"none\" stroke=\"" << kPalette[1]
     << "\" stroke-width=\"2\" points=\"";
  bool first = true;
  for (const auto& p : series.points) {
    if (!p.unit_price) continue;
    os << (first ? "" : " ") << num(sx(p.year)) << ',' << num(sp(*p.unit_price));
    first = false;
  }
  os << "\"/>\n";

  if (forecast && !forecast->points.empty()) {
    std::string kg_path, price_path;
    for (const auto& p : forecast->points) {
      if (p.year < forecast->last_observed_year) continue;
      const char* cmd = kg_path.empty() ? "M" : " L";
      kg_path += cmd + num(sx(p.year)) + ',' + num(sk(p.kg));
      price_path += (price_path.empty() ? "M" : " L") + num(sx(p.year)) + ',' + num(sp(p.price));
    }
    os << "<path class=\"forecast\" fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\" "
          "stroke-dasharray=\"6 4\" data-start-year=\""
       << forecast->last_observed_year << "\" d=\"" << kg_path << ' ' << price_path << "\"/>\n";
  }

  for (int year : anomaly_years) {
    const auto* p = series.find(year);
    if (!p) continue;
    os << "<circle class=\"anomaly\" data-year=\"" << year << "\" cx=\"" << num(sx(year))
       << "\" cy=\"" << num(sk(p->kg)) << "\" r=\"6\" fill=\"none\" stroke=\"#000\" "
          "stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_segment_scatter_svg(const std::vector<ScatterPoint>& points,
                                       const std::string& comment) {
  std::ostringstream os;
  open_svg(os, comment, "Market segments (log-log)");
  frame(os);
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& p : points) {
    if (p.avg_price <= 0.0 || p.avg_kg <= 0.0) continue;
    x_lo = std::min(x_lo, std::log10(p.avg_price));
    x_hi = std::max(x_hi, std::log10(p.avg_price));
    y_lo = std::min(y_lo, std::log10(p.avg_kg));
    y_hi = std::max(y_hi, std::log10(p.avg_kg));
  }
  if (x_lo > x_hi) {
    x_lo = y_lo = 0.0;
    x_hi = y_hi = 1.0;
  }
  x_lo = std::floor(x_lo);
  x_hi = std::max(std::ceil(x_hi), x_lo + 1);
  y_lo = std::floor(y_lo);
  y_hi = std::max(std::ceil(y_hi), y_lo + 1);
  const Scale sx{x_lo, x_hi, kLeft, kWidth - kRight - 120};
  const Scale sy{y_lo, y_hi, kHeight - kBottom, kTop};
  for (double d = x_lo; d <= x_hi; d += 1.0) {
    os << "<text x=\"" << num(sx(d)) << "\" y=\"" << num(kHeight - kBottom + 16)
       << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = y_lo; d <= y_hi; d += 1.0) {
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(sy(d) + 4)
       << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  os << "<text x=\"" << num((kLeft + kWidth - kRight - 120) / 2) << "\" y=\""
     << num(kHeight - 12) << "\" text-anchor=\"middle\">average unit price (USD/kg, log)</text>\n";
  os << "<text x=\"20\" y=\"" << num(kHeight / 2) << "\" transform=\"rotate(-90 20 "
     << num(kHeight / 2) << ")\" text-anchor=\"middle\">average volume (kg, log)</text>\n";
  for (const auto& p : points) {
    if (p.avg_price <= 0.0 || p.avg_kg <= 0.0) continue;
    const char* colour = p.archetype ? kPalette[static_cast<int>(*p.archetype)] : "#999";
    os << "<circle class=\"code\" data-hs-code=\"" << xml_escape(p.hs_code) << "\" cx=\""
       << num(sx(std::log10(p.avg_price))) << "\" cy=\"" << num(sy(std::log10(p.avg_kg)))
       << "\" r=\"4\" fill=\"" << colour << "\" fill-opacity=\"0.8\"/>\n";
  }
  for (std::size_t a = 0; a < kArchetypeCount; ++a) {
    const double y = kTop + 16 + 18.0 * a;
    os << "<circle cx=\"" << num(kWidth - kRight - 100) << "\" cy=\"" << num(y - 4)
       << "\" r=\"5\" fill=\"" << kPalette[a] << "\"/>\n";
    os << "<text x=\"" << num(kWidth - kRight - 90) << "\" y=\"" << num(y) << "\">"
       << to_string(static_cast<Archetype>(a)) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_shap_bars_svg(const ShapSummary& summary, const std::string& comment) {
  std::ostringstream os;
  open_svg(os, comment, "Mean |SHAP| by feature");
  const auto& order = summary.overall;
  double max_total = 0.0;
  for (const auto& f : order) max_total = std::max(max_total, f.mean_abs);
  if (max_total <= 0.0) max_total = 1.0;
  const double left = 190.0, right = kWidth - 170.0;
  const double bar_h = order.empty() ? 0.0
                                     : std::min(28.0, (kHeight - kTop - kBottom) / order.size());
  std::map<std::string, std::vector<double>> by_feature;
  for (std::size_t c = 0; c < summary.class_names.size(); ++c) {
    for (const auto& f : summary.per_class[c]) {
      auto& v = by_feature[f.feature];
      v.resize(summary.class_names.size());
      v[c] = f.mean_abs;
    }
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double y = kTop + i * bar_h;
    os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + bar_h * 0.65)
       << "\" text-anchor=\"end\">" << xml_escape(order[i].feature) << "</text>\n";
    double x = left;
    const auto& parts = by_feature[order[i].feature];
    for (std::size_t c = 0; c < parts.size(); ++c) {
      const double w = parts[c] / max_total * (right - left);
      os << "<rect class=\"bar\" data-feature=\"" << xml_escape(order[i].feature)
         << "\" data-class=\"" << xml_escape(summary.class_names[c]) << "\" x=\"" << num(x)
         << "\" y=\"" << num(y + 2) << "\" width=\"" << num(w) << "\" height=\""
         << num(bar_h - 4) << "\" fill=\"" << kPalette[c % 8] << "\"/>\n";
      x += w;
    }
  }
  os << "<text x=\"" << num((left + right) / 2) << "\" y=\"" << num(kHeight - 12)
     << "\" text-anchor=\"middle\">mean(|SHAP value|), stacked by class</text>\n";
  for (std::size_t c = 0; c < summary.class_names.size(); ++c) {
    const double y = kTop + 12 + 18.0 * c;
    os << "<rect x=\"" << num(right + 12) << "\" y=\"" << num(y - 9) << "\" width=\"10\" "
       << "height=\"10\" fill=\"" << kPalette[c % 8] << "\"/>\n";
    os << "<text x=\"" << num(right + 26) << "\" y=\"" << num(y) << "\">"
       << xml_escape(summary.class_names[c]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace scrapsig
