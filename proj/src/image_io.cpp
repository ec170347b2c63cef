#include "refverify/image_io.hpp"

#include <jpeglib.h>
#include <png.h>
#include <zlib.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "refverify/errors.hpp"

namespace refverify {

namespace {

void append_u32_be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>((v >> 24) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 16) & 0xFF));
  out.push_back(static_cast<uint8_t>((v >> 8) & 0xFF));
  out.push_back(static_cast<uint8_t>(v & 0xFF));
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
  append_u32_be(out, static_cast<uint32_t>(data.size()));
  const size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uint32_t crc = static_cast<uint32_t>(
      ::crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start)));
  append_u32_be(out, crc);
}

uint32_t adler32_of(const std::vector<uint8_t>& data) {
  return static_cast<uint32_t>(::adler32(1L, data.data(), static_cast<uInt>(data.size())));
}

}  // namespace

std::vector<uint8_t> png_encode(const RasterImage& image) {
  const int w = image.width(), h = image.height();
  // Raw scanlines, filter byte 0 per row.
  std::vector<uint8_t> raw;
  raw.reserve(static_cast<size_t>(h) * (1 + static_cast<size_t>(w) * 3));
  const auto& px = image.pixels();
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);
    const size_t row = static_cast<size_t>(y) * static_cast<size_t>(w) * 3;
    raw.insert(raw.end(), px.begin() + row, px.begin() + row + static_cast<size_t>(w) * 3);
  }

  // zlib stream with stored deflate blocks only (deterministic bytes).
  std::vector<uint8_t> idat;
  idat.push_back(0x78);
  idat.push_back(0x01);
  size_t off = 0;
  while (off < raw.size()) {
    const size_t n = std::min<size_t>(65535, raw.size() - off);
    const bool final = off + n == raw.size();
    idat.push_back(final ? 0x01 : 0x00);
    idat.push_back(static_cast<uint8_t>(n & 0xFF));
    idat.push_back(static_cast<uint8_t>((n >> 8) & 0xFF));
    idat.push_back(static_cast<uint8_t>(~n & 0xFF));
    idat.push_back(static_cast<uint8_t>((~n >> 8) & 0xFF));
    idat.insert(idat.end(), raw.begin() + off, raw.begin() + off + n);
    off += n;
  }
  append_u32_be(idat, adler32_of(raw));

  std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<uint8_t> ihdr;
  append_u32_be(ihdr, static_cast<uint32_t>(w));
  append_u32_be(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // no interlace
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", idat);
  append_chunk(out, "IEND", {});
  return out;
}

RasterImage png_decode(const std::vector<uint8_t>& bytes) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&im, bytes.data(), bytes.size()))
    throw ProtocolError(std::string("png decode failed: ") + im.message);
  im.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> px(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, px.data(), 0, nullptr)) {
    std::string msg = im.message;
    png_image_free(&im);
    throw ProtocolError("png decode failed: " + msg);
  }
  return RasterImage::from_pixels(static_cast<int>(im.width), static_cast<int>(im.height), std::move(px));
}

RasterImage read_png(const std::string& path) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.c_str()))
    throw ConfigError("cannot read png '" + path + "': " + im.message);
  im.format = PNG_FORMAT_RGB;
  std::vector<uint8_t> px(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, px.data(), 0, nullptr)) {
    std::string msg = im.message;
    png_image_free(&im);
    throw ConfigError("cannot read png '" + path + "': " + msg);
  }
  return RasterImage::from_pixels(static_cast<int>(im.width), static_cast<int>(im.height), std::move(px));
}

void write_png(const std::string& path, const RasterImage& image) {
  const std::vector<uint8_t> bytes = png_encode(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("short write to '" + path + "'");
}

namespace {

struct JpegErrorMgr {
  jpeg_error_mgr pub;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  longjmp(err->jump, 1);
}

}  // namespace

RasterImage read_jpeg(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), std::fclose);
  if (!file) throw ConfigError("cannot open jpeg '" + path + "'");

  jpeg_decompress_struct cinfo;
  JpegErrorMgr jerr;
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw ConfigError("cannot read jpeg '" + path + "': " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  std::vector<uint8_t> px(static_cast<size_t>(w) * static_cast<size_t>(h) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    uint8_t* row = px.data() + static_cast<size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return RasterImage::from_pixels(w, h, std::move(px));
}

RasterImage read_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ConfigError("cannot open image '" + path + "'");
  uint8_t magic[3] = {0, 0, 0};
  probe.read(reinterpret_cast<char*>(magic), 3);
  probe.close();
  if (magic[0] == 0x89 && magic[1] == 'P') return read_png(path);
  if (magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg(path);
  throw ConfigError("unsupported image format for '" + path + "' (expect PNG or JPEG)");
}

}  // namespace refverify
