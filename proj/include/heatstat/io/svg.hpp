#pragma once

// Static line charts: axes, tick labels, one polyline per series, legend.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace heatstat::io {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 720;
  int height = 480;
};

namespace detail {

inline std::string fmt(double x, const char* spec = "%.4g") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline std::string render_svg(const LinePlot& plot) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double left = 70, right = 150, top = 40, bottom = 55;
  const double pw = plot.width - left - right;
  const double ph = plot.height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : plot.series)
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(plot.width) +
         "\" height=\"" + std::to_string(plot.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape_xml(plot.title) + "</text>\n";
  out += "<rect x=\"" + detail::fmt(left) + "\" y=\"" + detail::fmt(top) + "\" width=\"" + detail::fmt(pw) +
         "\" height=\"" + detail::fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    out += "<line x1=\"" + detail::fmt(sx(xv)) + "\" y1=\"" + detail::fmt(top + ph) + "\" x2=\"" +
           detail::fmt(sx(xv)) + "\" y2=\"" + detail::fmt(top + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::fmt(sx(xv)) + "\" y=\"" + detail::fmt(top + ph + 18) +
           "\" text-anchor=\"middle\">" + detail::fmt(xv) + "</text>\n";
    out += "<line x1=\"" + detail::fmt(left - 5) + "\" y1=\"" + detail::fmt(sy(yv)) + "\" x2=\"" +
           detail::fmt(left) + "\" y2=\"" + detail::fmt(sy(yv)) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + detail::fmt(left - 8) + "\" y=\"" + detail::fmt(sy(yv) + 4) +
           "\" text-anchor=\"end\">" + detail::fmt(yv) + "</text>\n";
  }
  out += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"" + detail::fmt(plot.height - 12.0) +
         "\" text-anchor=\"middle\">" + detail::escape_xml(plot.x_label) + "</text>\n";
  out += "<text transform=\"translate(16," + detail::fmt(top + ph / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + detail::escape_xml(plot.y_label) + "</text>\n";

  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const char* color = palette[s % 6];
    // Non-finite points split the polyline into segments.
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
               pts + "\"/>\n";
        pts.clear();
      }
    };
    for (const auto& [x, y] : plot.series[s].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) {
        flush();
        continue;
      }
      if (!pts.empty()) pts += ' ';
      pts += detail::fmt(sx(x), "%.2f") + "," + detail::fmt(sy(y), "%.2f");
    }
    flush();
    const double ly = top + 16.0 * (s + 1);
    out += "<line x1=\"" + detail::fmt(left + pw + 12) + "\" y1=\"" + detail::fmt(ly) + "\" x2=\"" +
           detail::fmt(left + pw + 32) + "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::fmt(left + pw + 38) + "\" y=\"" + detail::fmt(ly + 4) + "\">" +
           detail::escape_xml(plot.series[s].name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace heatstat::io
