// SPDX-License-Identifier: Apache-2.0

#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace odorgen::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string render_loss_svg(const std::vector<diffusion::EpochMetrics>& metrics) {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  if (!metrics.empty()) {
    x_min = x_max = metrics.front().epoch;
    y_min = y_max = metrics.front().total_loss;
    for (const auto& m : metrics) {
      x_min = std::min<double>(x_min, m.epoch);
      x_max = std::max<double>(x_max, m.epoch);
      for (double v : {m.mse_loss, m.ce_loss, m.total_loss}) {
        if (!std::isfinite(v)) continue;
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      }
    }
    y_min = std::min(y_min, 0.0);
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - (y - y_min) / (y_max - y_min)) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
    << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"14\">Training loss</text>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
    << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
    << kTop + ph << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 8
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y_min + (y_max - y_min) * k / 4.0;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(yv) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << label(yv)
      << "</text>\n";
    const double xv = x_min + (x_max - x_min) * k / 4.0;
    s << "<text x=\"" << num(px(xv)) << "\" y=\"" << kTop + ph + 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << label(xv)
      << "</text>\n";
  }

  struct Series {
    const char* name;
    const char* colour;
    double diffusion::EpochMetrics::*field;
  };
  const Series series[] = {{"mse_loss", "#1f77b4", &diffusion::EpochMetrics::mse_loss},
                           {"ce_loss", "#ff7f0e", &diffusion::EpochMetrics::ce_loss},
                           {"total_loss", "#2ca02c", &diffusion::EpochMetrics::total_loss}};
  int row = 0;
  for (const auto& ser : series) {
    s << "<polyline id=\"" << ser.name << "\" fill=\"none\" stroke=\"" << ser.colour
      << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& m : metrics) {
      const double v = m.*ser.field;
      if (!std::isfinite(v)) continue;
      if (!first) s << ' ';
      s << num(px(m.epoch)) << ',' << num(py(v));
      first = false;
    }
    s << "\"/>\n";
    const double ly = kTop + 12 + 14 * row++;
    s << "<line x1=\"" << kLeft + pw - 110 << "\" y1=\"" << ly - 4 << "\" x2=\""
      << kLeft + pw - 90 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << ser.colour
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << kLeft + pw - 85 << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << ser.name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace odorgen::cli
