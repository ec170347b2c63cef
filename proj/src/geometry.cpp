#include "refverify/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refverify {

BoundingBox::BoundingBox(double x0, double y0, double x1, double y1)
    : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
  if (!(std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1)))
    throw std::invalid_argument("box coordinates must be finite");
  if (x0 > x1 || y0 > y1)
    throw std::invalid_argument("box must satisfy x_min <= x_max and y_min <= y_max");
}

BoundingBox BoundingBox::from_xywh(double x, double y, double w, double h) {
  if (w < 0 || h < 0) throw std::invalid_argument("box width/height must be nonnegative");
  return BoundingBox(x, y, x + w, y + h);
}

BoundingBox BoundingBox::translated(double dx, double dy) const {
  return BoundingBox(x_min + dx, y_min + dy, x_max + dx, y_max + dy);
}

MatchThreshold::MatchThreshold(double t) : iou_min(t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("iou threshold must be in [0,1]");
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = std::max(0.0, ix) * std::max(0.0, iy);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

bool is_hit(const BoundingBox& pred, const BoundingBox& gt, MatchThreshold t) {
  return iou(pred, gt) > t.iou_min;
}

double acc_at(const std::vector<std::pair<std::optional<BoundingBox>, BoundingBox>>& items,
              MatchThreshold t) {
  if (items.empty()) throw std::invalid_argument("no items");
  size_t hits = 0;
  for (const auto& [pred, gt] : items)
    if (pred && is_hit(*pred, gt, t)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(items.size());
}

}  // namespace refverify
