#include "metaradar/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace metaradar {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#444444"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  const auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  for (const auto& s : series) {
    for (double x : s.x) {
      if (spec.log_x && !(x > 0)) continue;
      x_lo = std::min(x_lo, tx(x));
      x_hi = std::max(x_hi, tx(x));
    }
  }
  if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1;
  if (spec.log_x) x_lo = std::floor(x_lo), x_hi = std::ceil(x_hi);
  if (x_hi <= x_lo) x_hi = x_lo + 1;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double x) { return kLeft + (tx(x) - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) {
    const double c = std::clamp(y, spec.y_min, spec.y_max);
    return kTop + (1.0 - (c - spec.y_min) / (spec.y_max - spec.y_min)) * ph;
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y ticks
  for (int i = 0; i <= 5; ++i) {
    const double v = spec.y_min + (spec.y_max - spec.y_min) * i / 5.0;
    o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << num(py(v)) << "\" y2=\"" << num(py(v))
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  // x ticks
  const int xt = spec.log_x ? static_cast<int>(x_hi - x_lo) : 5;
  for (int i = 0; i <= xt; ++i) {
    const double t = x_lo + (x_hi - x_lo) * i / xt;
    const double sx = kLeft + (t - x_lo) / (x_hi - x_lo) * pw;
    std::string label = spec.log_x ? "1e" + std::to_string(static_cast<int>(std::lround(t))) : num(t);
    o << "<line x1=\"" << num(sx) << "\" x2=\"" << num(sx) << "\" y1=\"" << kTop << "\" y2=\"" << kTop + ph
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << num(sx) << "\" y=\"" << kTop + ph + 16 << "\" text-anchor=\"middle\">" << label
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % kColors.size()];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\""
      << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t j = 0; j < std::min(s.x.size(), s.y.size()); ++j) {
      if (spec.log_x && !(s.x[j] > 0)) continue;
      o << num(px(s.x[j])) << ',' << num(py(s.y[j])) << ' ';
    }
    o << "\"/>\n";
    const double ly = kTop + 16 + 16 * static_cast<double>(i);
    o << "<line x1=\"" << kLeft + 10 << "\" x2=\"" << kLeft + 34 << "\" y1=\"" << ly << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
      << "/>\n";
    o << "<text x=\"" << kLeft + 40 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace metaradar
