#include "refverify/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "refverify/analysis.hpp"

namespace refverify {

namespace {

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<double> interior_grid(double step) {
  if (!(step > 0.0 && step <= 0.1))
    throw std::invalid_argument("grid step must lie in (0, 0.1]");
  std::vector<double> xs;
  const auto points = static_cast<uint64_t>(std::llround(1.0 / step)) - 1;
  xs.reserve(points);
  for (uint64_t i = 1; i <= points; ++i) {
    const double x = static_cast<double>(i) * step;
    if (x >= 1.0) break;
    xs.push_back(x);
  }
  return xs;
}

}  // namespace

CurveKind curve_kind_from_name(const std::string& name) {
  if (name == "threshold_vs_q1") return CurveKind::ThresholdVsQ1;
  if (name == "threshold_vs_q") return CurveKind::ThresholdVsQ;
  if (name == "gain_vs_q") return CurveKind::GainVsQ;
  throw std::invalid_argument("unknown curve kind '" + name +
                              "' (expect threshold_vs_q1, threshold_vs_q, gain_vs_q)");
}

const char* to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::ThresholdVsQ1: return "threshold_vs_q1";
    case CurveKind::ThresholdVsQ: return "threshold_vs_q";
    case CurveKind::GainVsQ: return "gain_vs_q";
  }
  return "?";
}

std::vector<CurveSample> emit_curves(CurveKind kind, double grid_step,
                                     const std::vector<double>& q2_values) {
  const std::vector<double> xs = interior_grid(grid_step);
  std::vector<CurveSample> samples;
  switch (kind) {
    case CurveKind::ThresholdVsQ1: {
      if (q2_values.empty()) throw std::invalid_argument("threshold_vs_q1 needs q2 values");
      for (double q2 : q2_values) {
        const std::string series = "q2=" + fixed6(q2);
        for (double x : xs) samples.push_back({series, x, p_threshold(x, q2)});
      }
      break;
    }
    case CurveKind::ThresholdVsQ:
      for (double x : xs) samples.push_back({"threshold", x, p_threshold(x, 1.0 - x)});
      break;
    case CurveKind::GainVsQ:
      for (double x : xs) samples.push_back({"gain", x, symmetric_gain(x)});
      break;
  }
  return samples;
}

std::string curves_to_csv(const std::vector<CurveSample>& samples) {
  std::string out = "series,x,y\n";
  for (const auto& s : samples) {
    out += s.series;
    out += ',';
    out += fixed6(s.x);
    out += ',';
    out += fixed6(s.y);
    out += '\n';
  }
  return out;
}

std::string curves_to_svg(const std::vector<CurveSample>& samples, const std::string& title) {
  constexpr int kW = 640, kH = 420;
  constexpr int kLeft = 60, kRight = 20, kTop = 40, kBottom = 40;
  constexpr const char* kColors[] = {"#c0392b", "#2980b9", "#27ae60", "#8e44ad",
                                     "#d35400", "#16a085", "#7f8c8d"};

  double ymin = 0.0, ymax = 1.0;
  if (!samples.empty()) {
    ymin = ymax = samples.front().y;
    for (const auto& s : samples) {
      ymin = std::min(ymin, s.y);
      ymax = std::max(ymax, s.y);
    }
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  }

  const auto sx = [&](double x) { return kLeft + x * (kW - kLeft - kRight); };
  const auto sy = [&](double y) {
    return kH - kBottom - (y - ymin) / (ymax - ymin) * (kH - kTop - kBottom);
  };

  std::map<std::string, std::vector<const CurveSample*>> by_series;
  std::vector<std::string> series_order;
  for (const auto& s : samples) {
    if (!by_series.count(s.series)) series_order.push_back(s.series);
    by_series[s.series].push_back(&s);
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) +
         "\" height=\"" + std::to_string(kH) + "\" viewBox=\"0 0 " + std::to_string(kW) + " " +
         std::to_string(kH) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kW / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";
  // axes
  svg += "<line x1=\"" + std::to_string(kLeft) + "\" y1=\"" + std::to_string(kH - kBottom) +
         "\" x2=\"" + std::to_string(kW - kRight) + "\" y2=\"" + std::to_string(kH - kBottom) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(kLeft) + "\" y1=\"" + std::to_string(kTop) + "\" x2=\"" +
         std::to_string(kLeft) + "\" y2=\"" + std::to_string(kH - kBottom) +
         "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = i / 4.0;
    svg += "<text x=\"" + fixed6(sx(fx)) + "\" y=\"" + std::to_string(kH - kBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fixed6(fx).substr(0, 4) + "</text>\n";
    const double fy = ymin + fx * (ymax - ymin);
    svg += "<text x=\"" + std::to_string(kLeft - 8) + "\" y=\"" + fixed6(sy(fy) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fixed6(fy).substr(0, 5) + "</text>\n";
  }

  int color_index = 0;
  int legend_y = kTop + 6;
  for (const auto& name : series_order) {
    const char* color = kColors[color_index % 7];
    std::string points;
    for (const CurveSample* s : by_series[name])
      points += fixed6(sx(s->x)) + "," + fixed6(sy(s->y)) + " ";
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + std::to_string(kW - kRight - 150) + "\" y=\"" +
           std::to_string(legend_y) + "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
           color + "\">" + name + "</text>\n";
    legend_y += 16;
    ++color_index;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace refverify
