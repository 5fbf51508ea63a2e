#pragma once

// Minimal deterministic SVG charts: lines and scatter points on linear axes.
// Output depends only on the input data, so re-rendering is byte-identical.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace smallcar::plot {

enum class Style { kLine, kPoints };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Style style = Style::kLine;
  std::string color;  // empty picks from the palette
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 640;
  int height = 420;
  bool equal_aspect = false;
  std::size_t max_points = 4000;  // scatter series are decimated beyond this
};

namespace detail {

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

inline double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

inline std::string tick_label(double v, double step) {
  if (std::abs(v) < step * 1e-9) v = 0.0;
  const int decimals = std::max(0, -static_cast<int>(std::floor(std::log10(step) + 1e-9)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      const double d = std::max(std::abs(lo) * 0.1, 1e-3);
      lo -= d;
      hi += d;
    }
    const double m = 0.04 * (hi - lo);
    lo -= m;
    hi += m;
  }
};

}  // namespace detail

inline std::string render_svg(const Chart& chart, const std::vector<Series>& series) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("plot series '" + s.label + "': x/y length mismatch");
  }
  const double left = 70, right = 20, top = 36, bottom = 52;
  const double pw = chart.width - left - right;
  const double ph = chart.height - top - bottom;

  detail::Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.add(v);
    for (double v : s.y) ry.add(v);
  }
  rx.pad();
  ry.pad();
  if (chart.equal_aspect) {
    const double sx = (rx.hi - rx.lo) / pw;
    const double sy = (ry.hi - ry.lo) / ph;
    if (sx > sy) {
      const double c = 0.5 * (ry.lo + ry.hi);
      ry.lo = c - 0.5 * sx * ph;
      ry.hi = c + 0.5 * sx * ph;
    } else {
      const double c = 0.5 * (rx.lo + rx.hi);
      rx.lo = c - 0.5 * sy * pw;
      rx.hi = c + 0.5 * sy * pw;
    }
  }
  auto px = [&](double x) { return left + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
  auto py = [&](double y) { return top + (ry.hi - y) / (ry.hi - ry.lo) * ph; };
  using detail::num;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\"" << chart.height
    << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(chart.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
    << detail::escape(chart.title) << "</text>\n";

  const double xs = detail::nice_step(rx.hi - rx.lo, 6);
  for (double v = std::ceil(rx.lo / xs) * xs; v <= rx.hi + 1e-12; v += xs) {
    o << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(top) << "\" x2=\"" << num(px(v)) << "\" y2=\""
      << num(top + ph) << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << num(px(v)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
      << detail::tick_label(v, xs) << "</text>\n";
  }
  const double ys = detail::nice_step(ry.hi - ry.lo, 5);
  for (double v = std::ceil(ry.lo / ys) * ys; v <= ry.hi + 1e-12; v += ys) {
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(left + pw) << "\" y2=\""
      << num(py(v)) << "\" stroke=\"#e0e0e0\"/>\n";
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">"
      << detail::tick_label(v, ys) << "</text>\n";
  }
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(chart.height - 12.0)
    << "\" text-anchor=\"middle\">" << detail::escape(chart.x_label) << "</text>\n";
  o << "<text transform=\"translate(16 " << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << detail::escape(chart.y_label) << "</text>\n";

  std::size_t index = 0;
  for (const auto& s : series) {
    const std::string color =
        s.color.empty() ? detail::kPalette[index % (sizeof detail::kPalette / sizeof *detail::kPalette)] : s.color;
    if (s.style == Style::kLine) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        first = false;
      }
      o << "\"/>\n";
    } else {
      const std::size_t stride = std::max<std::size_t>(1, (s.x.size() + chart.max_points - 1) / chart.max_points);
      o << "<g fill=\"" << color << "\" fill-opacity=\"0.5\">\n";
      for (std::size_t i = 0; i < s.x.size(); i += stride) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"1.6\"/>\n";
      }
      o << "</g>\n";
    }
    const double ly = top + 14 + 16 * static_cast<double>(index);
    o << "<rect x=\"" << num(left + 10) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\"" << color
      << "\"/>\n";
    o << "<text x=\"" << num(left + 26) << "\" y=\"" << num(ly + 1) << "\">" << detail::escape(s.label)
      << "</text>\n";
    ++index;
  }
  o << "</svg>\n";
  return o.str();
}

inline void write_svg(const std::string& path, const Chart& chart, const std::vector<Series>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render_svg(chart, series);
  if (!out) throw std::runtime_error("error writing " + path);
}

}  // namespace smallcar::plot
