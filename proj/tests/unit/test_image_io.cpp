#include <doctest.h>

#include <cstddef>
#include <cstdio>
#include <vector>

#include <jpeglib.h>

#include "refverify/errors.hpp"
#include "refverify/image_io.hpp"
#include "refverify/rng.hpp"
#include "test_util.hpp"

using namespace refverify;

namespace {

RasterImage random_image(Xoshiro256& rng, int w, int h) {
  std::vector<uint8_t> px(static_cast<size_t>(w) * h * 3);
  for (auto& byte : px) byte = static_cast<uint8_t>(rng.uniform_below(256));
  return RasterImage::from_pixels(w, h, std::move(px));
}

// Minimal libjpeg writer, only used to exercise the JPEG read path.
void write_test_jpeg(const std::string& path, const RasterImage& image, int quality) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  FILE* file = std::fopen(path.c_str(), "wb");
  REQUIRE(file != nullptr);
  jpeg_stdio_dest(&cinfo, file);
  cinfo.image_width = static_cast<JDIMENSION>(image.width());
  cinfo.image_height = static_cast<JDIMENSION>(image.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<uint8_t> row(static_cast<size_t>(image.width()) * 3);
  while (cinfo.next_scanline < cinfo.image_height) {
    const size_t offset = static_cast<size_t>(cinfo.next_scanline) * image.width() * 3;
    std::copy_n(image.pixels().begin() + offset, row.size(), row.begin());
    JSAMPROW row_ptr = row.data();
    jpeg_write_scanlines(&cinfo, &row_ptr, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(file);
}

}  // namespace

TEST_CASE("raster image construction and digest") {
  CHECK_THROWS_AS(RasterImage(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(RasterImage::from_pixels(2, 2, std::vector<uint8_t>(11)), std::invalid_argument);

  RasterImage a(4, 3, {10, 20, 30});
  RasterImage b(4, 3, {10, 20, 30});
  CHECK(a.digest() == b.digest());
  b.set(1, 1, {11, 20, 30});
  CHECK(a.digest() != b.digest());
  // same bytes, different shape
  RasterImage c(3, 4, {10, 20, 30});
  CHECK(a.digest() != c.digest());
}

TEST_CASE("png encode/decode round-trips random images") {
  Xoshiro256 rng(7);
  for (const auto [w, h] : {std::pair{1, 1}, {3, 5}, {64, 48}, {200, 1}, {1, 77}}) {
    const RasterImage original = random_image(rng, w, h);
    const RasterImage decoded = png_decode(png_encode(original));
    CHECK(decoded == original);
  }
}

TEST_CASE("png encoding is byte-deterministic") {
  Xoshiro256 rng(9);
  const RasterImage image = random_image(rng, 33, 21);
  CHECK(png_encode(image) == png_encode(image));
}

TEST_CASE("png file round trip and dispatch") {
  testutil::TempDir dir("png");
  Xoshiro256 rng(5);
  const RasterImage image = random_image(rng, 31, 17);
  write_png(dir.file("x.png"), image);
  CHECK(read_png(dir.file("x.png")) == image);
  CHECK(read_image(dir.file("x.png")) == image);
}

TEST_CASE("large scanlines cross the stored-block boundary") {
  // One row of a 30000-px image exceeds the 65535-byte deflate stored block.
  RasterImage image(30000, 2, {1, 2, 3});
  image.set(29999, 1, {9, 8, 7});
  CHECK(png_decode(png_encode(image)) == image);
}

TEST_CASE("jpeg decoding normalizes to RGB") {
  testutil::TempDir dir("jpeg");
  // A flat image survives JPEG compression nearly unchanged.
  RasterImage flat(40, 30, {200, 60, 60});
  write_test_jpeg(dir.file("x.jpg"), flat, 95);
  const RasterImage decoded = read_image(dir.file("x.jpg"));
  REQUIRE(decoded.width() == 40);
  REQUIRE(decoded.height() == 30);
  for (int y = 0; y < decoded.height(); y += 7)
    for (int x = 0; x < decoded.width(); x += 7) {
      const Rgb c = decoded.at(x, y);
      CHECK(std::abs(int(c[0]) - 200) <= 8);
      CHECK(std::abs(int(c[1]) - 60) <= 8);
      CHECK(std::abs(int(c[2]) - 60) <= 8);
    }
}

TEST_CASE("image io error paths") {
  testutil::TempDir dir("bad");
  CHECK_THROWS_AS(read_image(dir.file("missing.png")), ConfigError);
  testutil::write_file(dir.file("garbage.png"), "\x89PNG not really");
  CHECK_THROWS_AS(read_png(dir.file("garbage.png")), ConfigError);
  testutil::write_file(dir.file("noise.bin"), "hello");
  CHECK_THROWS_AS(read_image(dir.file("noise.bin")), ConfigError);
  CHECK_THROWS_AS(png_decode({1, 2, 3}), ProtocolError);
}
