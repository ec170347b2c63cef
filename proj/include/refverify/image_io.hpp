#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "refverify/image.hpp"

namespace refverify {

// PNG encoding is done by hand with stored (uncompressed) deflate blocks so
// that identical rasters produce identical bytes regardless of the zlib
// version on the host. Decoding goes through libpng and accepts any PNG,
// normalized to 8-bit RGB.
std::vector<uint8_t> png_encode(const RasterImage& image);
RasterImage png_decode(const std::vector<uint8_t>& bytes);

RasterImage read_png(const std::string& path);
void write_png(const std::string& path, const RasterImage& image);

// Baseline JPEG decode (libjpeg), normalized to RGB. Datasets may reference
// JPEG photos; overlays and all written artifacts stay PNG.
RasterImage read_jpeg(const std::string& path);

// Dispatches on magic bytes: PNG or JPEG.
RasterImage read_image(const std::string& path);

}  // namespace refverify
