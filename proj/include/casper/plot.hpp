#pragma once

// Static SVG chart of RT curves: one polyline per condition with SEM bars.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "casper/analysis.hpp"

namespace casper {

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
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

// 1, 2 or 5 times a power of ten, giving roughly `target` ticks.
inline double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace detail

inline std::string render_svg(const std::vector<RTCurve>& curves, const std::string& title) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double kW = 720, kH = 480, kLeft = 70, kRight = 200, kTop = 40, kBottom = 60;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  double x_max = 1.0, y_max = 1.0;
  for (const auto& c : curves) {
    for (const auto& p : c.points) {
      if (std::isnan(p.mean_rt)) continue;
      x_max = std::max(x_max, p.set_size);
      y_max = std::max(y_max, p.mean_rt + p.sem);
    }
  }
  const double x_step = detail::nice_step(x_max, 8);
  const double y_step = detail::nice_step(y_max, 6);
  x_max = std::ceil(x_max / x_step) * x_step;
  y_max = std::ceil(y_max / y_step) * y_step;
  auto sx = [&](double x) { return kLeft + pw * x / x_max; };
  auto sy = [&](double y) { return kTop + ph * (1.0 - y / y_max); };
  using detail::svg_num;

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(kW) + "\" height=\"" + svg_num(kH) +
       "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + svg_num(kLeft + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::svg_escape(title) + "</text>\n";
  s += "<g stroke=\"#999\" stroke-width=\"1\">\n";
  s += "<line x1=\"" + svg_num(kLeft) + "\" y1=\"" + svg_num(kTop + ph) + "\" x2=\"" + svg_num(kLeft + pw) +
       "\" y2=\"" + svg_num(kTop + ph) + "\"/>\n";
  s += "<line x1=\"" + svg_num(kLeft) + "\" y1=\"" + svg_num(kTop) + "\" x2=\"" + svg_num(kLeft) + "\" y2=\"" +
       svg_num(kTop + ph) + "\"/>\n";
  s += "</g>\n";
  for (double x = 0; x <= x_max + 1e-9; x += x_step) {
    s += "<text x=\"" + svg_num(sx(x)) + "\" y=\"" + svg_num(kTop + ph + 18) + "\" text-anchor=\"middle\">" +
         format_double(x) + "</text>\n";
  }
  for (double y = 0; y <= y_max + 1e-9; y += y_step) {
    s += "<line x1=\"" + svg_num(kLeft) + "\" y1=\"" + svg_num(sy(y)) + "\" x2=\"" + svg_num(kLeft + pw) +
         "\" y2=\"" + svg_num(sy(y)) + "\" stroke=\"#eee\"/>\n";
    s += "<text x=\"" + svg_num(kLeft - 8) + "\" y=\"" + svg_num(sy(y) + 4) + "\" text-anchor=\"end\">" +
         format_double(y) + "</text>\n";
  }
  s += "<text x=\"" + svg_num(kLeft + pw / 2) + "\" y=\"" + svg_num(kH - 16) +
       "\" text-anchor=\"middle\">set size</text>\n";
  s += "<text transform=\"translate(18," + svg_num(kTop + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">mean RT (iterations)</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const std::string color = kPalette[i % std::size(kPalette)];
    std::string pts;
    for (const auto& p : curves[i].points) {
      if (std::isnan(p.mean_rt)) continue;
      pts += svg_num(sx(p.set_size)) + "," + svg_num(sy(p.mean_rt)) + " ";
      s += "<line x1=\"" + svg_num(sx(p.set_size)) + "\" y1=\"" + svg_num(sy(p.mean_rt - p.sem)) + "\" x2=\"" +
           svg_num(sx(p.set_size)) + "\" y2=\"" + svg_num(sy(p.mean_rt + p.sem)) + "\" stroke=\"" + color +
           "\"/>\n";
      s += "<circle cx=\"" + svg_num(sx(p.set_size)) + "\" cy=\"" + svg_num(sy(p.mean_rt)) + "\" r=\"3\" fill=\"" +
           color + "\"/>\n";
    }
    s += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" + color + "\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
    s += "<line x1=\"" + svg_num(kLeft + pw + 16) + "\" y1=\"" + svg_num(ly) + "\" x2=\"" + svg_num(kLeft + pw + 40) +
         "\" y2=\"" + svg_num(ly) + "\" stroke-width=\"2\" stroke=\"" + color + "\"/>\n";
    s += "<text x=\"" + svg_num(kLeft + pw + 46) + "\" y=\"" + svg_num(ly + 4) + "\">" +
         detail::svg_escape(curves[i].condition) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace casper
