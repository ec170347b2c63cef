#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace refverify {

using Rgb = std::array<uint8_t, 3>;

// 8-bit RGB raster, row-major, 3 bytes per pixel. Images are value types;
// rendering copies rather than mutates.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgb fill = {0, 0, 0});
  static RasterImage from_pixels(int width, int height, std::vector<uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<uint8_t>& pixels() const { return pixels_; }
  std::vector<uint8_t>& pixels() { return pixels_; }

  Rgb at(int x, int y) const {
    const size_t i = index(x, y);
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const size_t i = index(x, y);
    pixels_[i] = c[0];
    pixels_[i + 1] = c[1];
    pixels_[i + 2] = c[2];
  }

  // Content hash over (width, height, pixel bytes); stable across runs and
  // platforms, used for cache keys and scripted-backend matching.
  uint64_t digest() const;

  bool operator==(const RasterImage&) const = default;

 private:
  size_t index(int x, int y) const {
    return (static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x)) * 3;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<uint8_t> pixels_;
};

}  // namespace refverify
