#pragma once

#include <vector>

#include "refverify/geometry.hpp"
#include "refverify/image.hpp"

namespace refverify {

// Overlay styling. Defaults: saturated red stroke for salience, digit labels
// as white text on a filled dark patch. Index labels use an embedded bitmap
// font so renders are reproducible bit-for-bit on any host.
struct OverlayStyle {
  Rgb stroke_color{255, 0, 0};
  int stroke_width = 3;        // >= 1
  int label_text_height = 16;  // >= 6
  Rgb label_background{0, 0, 0};
};

// Inclusive pixel rectangle.
struct IntRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool operator==(const IntRect&) const = default;
};

// True when some part of the box lies over the image plane. Fully
// out-of-frame boxes are a render error; partial overlap is clamped.
bool box_intersects_frame(const BoundingBox& box, int width, int height);

// Integer outline rect the stroke is drawn on: the box snapped outward to
// pixel centers and clamped to the frame. Zero-area boxes collapse to a
// one-pixel hairline.
IntRect outline_rect(const BoundingBox& box, int width, int height);

// Where the index label patch for `label` (1-based displayed value) lands:
// inside the box at its top-left, inset past the stroke, shifted inward when
// it would leave the frame.
IntRect label_patch_rect(const BoundingBox& box, int label, const OverlayStyle& style,
                         int width, int height);

// Copy of `image` with one rectangle outline drawn (no label). Pixels outside
// the stroke band are bit-identical to the input.
RasterImage render_single_box(const RasterImage& image, const BoundingBox& box,
                              const OverlayStyle& style = OverlayStyle());

// Copy of `image` with every box outlined and tagged with its 1-based index.
// Boxes are drawn in list order.
RasterImage render_indexed_boxes(const RasterImage& image, const std::vector<BoundingBox>& boxes,
                                 const OverlayStyle& style = OverlayStyle());

}  // namespace refverify
