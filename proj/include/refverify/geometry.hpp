#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace refverify {

// Axis-aligned box in corner form, continuous pixel units. Corner form keeps
// the intersection arithmetic branch-free; [x, y, w, h] annotations are
// converted at ingestion via from_xywh.
struct BoundingBox {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  BoundingBox() = default;
  // Throws std::invalid_argument unless x_min <= x_max, y_min <= y_max and
  // all coordinates are finite. Zero width/height is legal (area 0).
  BoundingBox(double x_min, double y_min, double x_max, double y_max);

  static BoundingBox from_xywh(double x, double y, double w, double h);

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  BoundingBox translated(double dx, double dy) const;

  bool operator==(const BoundingBox&) const = default;
};

struct MatchThreshold {
  double iou_min = 0.5;

  MatchThreshold() = default;
  explicit MatchThreshold(double t);  // throws unless 0 <= t <= 1
};

// Intersection area over union area. 0 when the union has zero area, so
// degenerate boxes score 0 against everything, including themselves.
double iou(const BoundingBox& a, const BoundingBox& b);

// Strict "exceeds": iou(pred, gt) > t.iou_min. An IoU of exactly t is a miss.
bool is_hit(const BoundingBox& pred, const BoundingBox& gt, MatchThreshold t = MatchThreshold());

// Fraction of items whose predicted box hits its ground truth. A missing
// prediction is an abstention and counts as a miss. Throws on an empty list.
double acc_at(const std::vector<std::pair<std::optional<BoundingBox>, BoundingBox>>& items,
              MatchThreshold t = MatchThreshold());

}  // namespace refverify
