/* Copyright 2026 The ALLoRA Lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "allora/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "allora/error.hpp"

namespace allora {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr double kMarginLeft = 70, kMarginRight = 20, kMarginTop = 36, kMarginBottom = 50;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

struct Axis {
  bool log = false;
  double lo = 0.0, hi = 1.0;  // in transformed units

  double tr(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

  void widen() {
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
      const double pad = log ? 0.5 : std::max(0.5, std::abs(lo) * 0.1);
      lo -= pad;
      hi += pad;
    }
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::floor(lo); e <= std::ceil(hi) + 1e-9; e += 1.0) {
        if (e >= lo - 1e-9 && e <= hi + 1e-9) t.push_back(e);
      }
      if (t.size() >= 2) return t;
      t.clear();
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (raw <= m * mag) {
        step = m * mag;
        break;
      }
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
    return t;
  }

  std::string label(double t) const { return tick_label(log ? std::pow(10.0, t) : t); }
};

}  // namespace

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& o) {
  if (o.width < 200 || o.height < 150) throw InvalidArgument("line_chart_svg: canvas too small");
  Axis ax{o.log_x}, ay{o.log_y};
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) {
      throw DimensionMismatch("line_chart_svg: series '" + s.label + "' has " +
                              std::to_string(s.x.size()) + " x and " +
                              std::to_string(s.y.size()) + " y values");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      xlo = std::min(xlo, ax.tr(s.x[i]));
      xhi = std::max(xhi, ax.tr(s.x[i]));
      ylo = std::min(ylo, ay.tr(s.y[i]));
      yhi = std::max(yhi, ay.tr(s.y[i]));
    }
  }
  if (xlo > xhi) xlo = xhi = ylo = yhi = 0.0;
  ax.lo = xlo, ax.hi = xhi, ay.lo = ylo, ay.hi = yhi;
  ax.widen();
  ay.widen();

  const double pw = o.width - kMarginLeft - kMarginRight;
  const double ph = o.height - kMarginTop - kMarginBottom;
  auto px = [&](double t) { return kMarginLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double t) { return kMarginTop + ph - (t - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\""
      << o.height << "\" viewBox=\"0 0 " << o.width << ' ' << o.height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fmt(kMarginLeft) << "\" y=\"" << fmt(kMarginTop) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!o.title.empty()) {
    svg << "<text x=\"" << fmt(o.width / 2.0) << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-size=\"14\">" << escape(o.title) << "</text>\n";
  }
  for (double t : ax.ticks()) {
    const std::string x = fmt(px(t));
    svg << "<line x1=\"" << x << "\" y1=\"" << fmt(kMarginTop + ph) << "\" x2=\"" << x
        << "\" y2=\"" << fmt(kMarginTop + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << fmt(kMarginTop + ph + 18)
        << "\" text-anchor=\"middle\">" << ax.label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const std::string y = fmt(py(t));
    svg << "<line x1=\"" << fmt(kMarginLeft - 5) << "\" y1=\"" << y << "\" x2=\""
        << fmt(kMarginLeft) << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(kMarginLeft - 8) << "\" y=\"" << y
        << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << ay.label(t) << "</text>\n";
  }
  if (!o.x_label.empty()) {
    svg << "<text x=\"" << fmt(kMarginLeft + pw / 2) << "\" y=\"" << fmt(o.height - 10.0)
        << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  }
  if (!o.y_label.empty()) {
    svg << "<text transform=\"translate(16," << fmt(kMarginTop + ph / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(o.y_label) << "</text>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      if (!first) svg << ' ';
      svg << fmt(px(ax.tr(s.x[i]))) << ',' << fmt(py(ay.tr(s.y[i])));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = kMarginTop + 14 + 16 * static_cast<double>(k);
    const double lx = kMarginLeft + pw - 150;
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 20)
        << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(lx + 26) << "\" y=\"" << fmt(ly)
        << "\" dominant-baseline=\"middle\">" << escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace allora
