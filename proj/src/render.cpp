#include "refverify/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace refverify {

namespace {

// 5x7 digit glyphs, one byte per row, low 5 bits used.
constexpr uint8_t kDigitFont[10][7] = {
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
};

constexpr Rgb kLabelText{255, 255, 255};
constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;

void check_style(const OverlayStyle& style) {
  if (style.stroke_width < 1) throw std::invalid_argument("stroke_width must be >= 1");
  if (style.label_text_height < 6) throw std::invalid_argument("label_text_height must be >= 6");
}

int font_scale(const OverlayStyle& style) {
  return std::max(1, style.label_text_height / kGlyphH);
}

int label_text_width(int label, int scale) {
  const int digits = static_cast<int>(std::to_string(label).size());
  return (kGlyphW * digits + (digits - 1)) * scale;
}

void fill_row(RasterImage& img, int y, int x0, int x1, Rgb c) {
  for (int x = x0; x <= x1; ++x) img.set(x, y, c);
}

void draw_ring(RasterImage& img, const IntRect& r, int thickness, Rgb c) {
  const int t = thickness;
  for (int y = r.y0; y <= std::min(r.y1, r.y0 + t - 1); ++y) fill_row(img, y, r.x0, r.x1, c);
  for (int y = std::max(r.y0 + t, r.y1 - t + 1); y <= r.y1; ++y) fill_row(img, y, r.x0, r.x1, c);
  for (int y = r.y0 + t; y <= r.y1 - t; ++y) {
    fill_row(img, y, r.x0, std::min(r.x1, r.x0 + t - 1), c);
    fill_row(img, y, std::max(r.x0 + t, r.x1 - t + 1), r.x1, c);
  }
}

void fill_rect_clipped(RasterImage& img, const IntRect& r, Rgb c) {
  const int x0 = std::max(0, r.x0), x1 = std::min(img.width() - 1, r.x1);
  const int y0 = std::max(0, r.y0), y1 = std::min(img.height() - 1, r.y1);
  for (int y = y0; y <= y1; ++y) fill_row(img, y, x0, x1, c);
}

void draw_label(RasterImage& img, const IntRect& patch, int label, const OverlayStyle& style) {
  fill_rect_clipped(img, patch, style.label_background);
  const int s = font_scale(style);
  const int pad = s;
  const std::string text = std::to_string(label);
  int cx = patch.x0 + pad;
  const int cy = patch.y0 + pad;
  for (char ch : text) {
    const uint8_t* glyph = kDigitFont[ch - '0'];
    for (int gy = 0; gy < kGlyphH; ++gy)
      for (int gx = 0; gx < kGlyphW; ++gx)
        if (glyph[gy] & (1 << (kGlyphW - 1 - gx)))
          fill_rect_clipped(img,
                            {cx + gx * s, cy + gy * s, cx + gx * s + s - 1, cy + gy * s + s - 1},
                            kLabelText);
    cx += (kGlyphW + 1) * s;
  }
}

}  // namespace

bool box_intersects_frame(const BoundingBox& box, int width, int height) {
  return box.x_min < width && box.x_max > 0 && box.y_min < height && box.y_max > 0;
}

IntRect outline_rect(const BoundingBox& box, int width, int height) {
  const auto clamp = [](int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); };
  IntRect r;
  r.x0 = clamp(static_cast<int>(std::floor(box.x_min)), 0, width - 1);
  r.y0 = clamp(static_cast<int>(std::floor(box.y_min)), 0, height - 1);
  r.x1 = clamp(static_cast<int>(std::ceil(box.x_max)) - 1, 0, width - 1);
  r.y1 = clamp(static_cast<int>(std::ceil(box.y_max)) - 1, 0, height - 1);
  r.x1 = std::max(r.x1, r.x0);
  r.y1 = std::max(r.y1, r.y0);
  return r;
}

IntRect label_patch_rect(const BoundingBox& box, int label, const OverlayStyle& style,
                         int width, int height) {
  const IntRect r = outline_rect(box, width, height);
  const int s = font_scale(style);
  const int pad = s;
  const int patch_w = label_text_width(label, s) + 2 * pad;
  const int patch_h = kGlyphH * s + 2 * pad;
  int x = r.x0 + style.stroke_width;
  int y = r.y0 + style.stroke_width;
  x = std::max(0, std::min(x, width - patch_w));
  y = std::max(0, std::min(y, height - patch_h));
  return {x, y, x + patch_w - 1, y + patch_h - 1};
}

RasterImage render_single_box(const RasterImage& image, const BoundingBox& box,
                              const OverlayStyle& style) {
  check_style(style);
  if (!box_intersects_frame(box, image.width(), image.height()))
    throw std::invalid_argument("box out of frame");
  RasterImage out = image;
  draw_ring(out, outline_rect(box, out.width(), out.height()), style.stroke_width,
            style.stroke_color);
  return out;
}

RasterImage render_indexed_boxes(const RasterImage& image, const std::vector<BoundingBox>& boxes,
                                 const OverlayStyle& style) {
  check_style(style);
  if (boxes.empty()) throw std::invalid_argument("no boxes to render");
  for (const auto& box : boxes)
    if (!box_intersects_frame(box, image.width(), image.height()))
      throw std::invalid_argument("box out of frame");
  RasterImage out = image;
  for (size_t i = 0; i < boxes.size(); ++i) {
    draw_ring(out, outline_rect(boxes[i], out.width(), out.height()), style.stroke_width,
              style.stroke_color);
    const int label = static_cast<int>(i) + 1;
    draw_label(out, label_patch_rect(boxes[i], label, style, out.width(), out.height()), label,
               style);
  }
  return out;
}

}  // namespace refverify
