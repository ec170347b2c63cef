#pragma once

#include <string>
#include <vector>

namespace refverify {

struct CurveSample {
  std::string series;
  double x = 0;
  double y = 0;
};

enum class CurveKind { ThresholdVsQ1, ThresholdVsQ, GainVsQ };

CurveKind curve_kind_from_name(const std::string& name);
const char* to_string(CurveKind kind);

// Samples the closed forms on the interior grid [step, 1-step]; the endpoints
// are excluded because the threshold denominators vanish there.
//  - ThresholdVsQ1: one series per q2 value, y = p_threshold(x, q2)
//  - ThresholdVsQ:  y = p_threshold(q, 1-q)
//  - GainVsQ:       y = symmetric_gain(q)
std::vector<CurveSample> emit_curves(CurveKind kind, double grid_step,
                                     const std::vector<double>& q2_values = {0.1, 0.2, 0.3, 0.4,
                                                                             0.45});

// "series,x,y" header plus one fixed 6-decimal row per sample; bit-exact for
// identical inputs.
std::string curves_to_csv(const std::vector<CurveSample>& samples);

// Small self-contained line plot, one polyline per series.
std::string curves_to_svg(const std::vector<CurveSample>& samples, const std::string& title);

}  // namespace refverify
