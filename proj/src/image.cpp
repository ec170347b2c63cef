#include "refverify/image.hpp"

#include <stdexcept>
#include <string>

#include "refverify/hash.hpp"

namespace refverify {

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
  pixels_.resize(static_cast<size_t>(width) * static_cast<size_t>(height) * 3);
  for (size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

RasterImage RasterImage::from_pixels(int width, int height, std::vector<uint8_t> pixels) {
  if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
  const size_t expected = static_cast<size_t>(width) * static_cast<size_t>(height) * 3;
  if (pixels.size() != expected)
    throw std::invalid_argument("pixel buffer size " + std::to_string(pixels.size()) +
                                " does not match " + std::to_string(expected));
  RasterImage image;
  image.width_ = width;
  image.height_ = height;
  image.pixels_ = std::move(pixels);
  return image;
}

uint64_t RasterImage::digest() const {
  Fnv1a64 h;
  // Dimensions serialized byte-by-byte so the hash is endianness-independent.
  uint8_t dims[8];
  for (int i = 0; i < 4; ++i) {
    dims[i] = static_cast<uint8_t>((static_cast<uint32_t>(width_) >> (8 * i)) & 0xFF);
    dims[4 + i] = static_cast<uint8_t>((static_cast<uint32_t>(height_) >> (8 * i)) & 0xFF);
  }
  h.bytes(dims, sizeof(dims));
  h.bytes(pixels_.data(), pixels_.size());
  return h.value();
}

}  // namespace refverify
