#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scenario_jsr/consensus.hpp"

namespace sjsr {

namespace detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Line chart of bound1 and bound2 against N, with a dash-dotted reference
/// line at the white-box upper bound. Undefined points are skipped.
inline std::string render_sweep_svg(const std::vector<SweepRow>& rows) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  auto take_y = [&](const std::optional<double>& v) {
    if (v && std::isfinite(*v)) {
      y_min = std::min(y_min, *v);
      y_max = std::max(y_max, *v);
    }
  };
  for (const SweepRow& r : rows) {
    x_min = std::min(x_min, static_cast<double>(r.N));
    x_max = std::max(x_max, static_cast<double>(r.N));
    take_y(r.bound1);
    take_y(r.bound2);
    take_y(r.whitebox_upper);
  }
  if (!std::isfinite(x_min)) x_min = 0, x_max = 1;
  if (x_max == x_min) x_max = x_min + 1;
  if (!std::isfinite(y_min)) y_min = 0, y_max = 1;
  const double pad = std::max(1e-6, 0.05 * (y_max - y_min));
  y_min -= pad;
  y_max += pad;

  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };
  using detail::fixed2;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double yv = y_min + (y_max - y_min) * t / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << fixed2(py(yv) + 4) << "\" text-anchor=\"end\">"
        << detail::tick_label(yv) << "</text>\n";
  }
  for (const SweepRow& r : rows) {
    svg << "<text x=\"" << fixed2(px(static_cast<double>(r.N))) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << r.N << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">number of samples N</text>\n";

  auto series = [&](auto get, const char* color, const char* label, double legend_y) {
    std::string points;
    for (const SweepRow& r : rows) {
      const std::optional<double> v = get(r);
      if (!v || !std::isfinite(*v)) continue;
      if (!points.empty()) points += ' ';
      points += fixed2(px(static_cast<double>(r.N))) + "," + fixed2(py(*v));
    }
    if (!points.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << points << "\"/>\n";
    }
    svg << "<line x1=\"" << kLeft + plot_w - 150 << "\" y1=\"" << legend_y << "\" x2=\"" << kLeft + plot_w - 120
        << "\" y2=\"" << legend_y << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w - 114 << "\" y=\"" << legend_y + 4 << "\">" << label << "</text>\n";
  };
  series([](const SweepRow& r) { return r.bound1; }, "#1f77b4", "Bound 1", kTop + 10);
  series([](const SweepRow& r) { return r.bound2; }, "#d62728", "Bound 2", kTop + 28);

  if (!rows.empty() && std::isfinite(rows.front().whitebox_upper)) {
    const double yref = py(rows.front().whitebox_upper);
    svg << "<line x1=\"" << kLeft << "\" y1=\"" << fixed2(yref) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
        << fixed2(yref) << "\" stroke=\"black\" stroke-dasharray=\"8,3,2,3\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w - 114 << "\" y=\"" << kTop + 50 << "\">white-box upper</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace sjsr
