// PNG and JPEG decoding on top of libpng's simplified API and libjpeg.

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "wildloc/error.h"
#include "wildloc/raster.h"

namespace wildloc {
namespace {

enum class ImageFormat { kPng, kJpeg };

ImageFormat SniffFormat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoError, path.string());
  unsigned char magic[8] = {};
  in.read(reinterpret_cast<char*>(magic), sizeof(magic));
  const auto n = in.gcount();
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P',  'N',  'G',
                                                 '\r', '\n', 0x1a, '\n'};
  if (n == 8 && std::memcmp(magic, kPngMagic, 8) == 0) return ImageFormat::kPng;
  if (n >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
    return ImageFormat::kJpeg;
  }
  throw Error(ErrorKind::kDecodeError,
              path.string() + ": not a PNG or JPEG file");
}

struct PngImage {
  png_image image{};
  PngImage() {
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
};

GrayRaster LoadPng(const std::filesystem::path& path) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw Error(ErrorKind::kDecodeError,
                path.string() + ": " + png.image.message);
  }
  png.image.format = PNG_FORMAT_RGBA;
  const int w = static_cast<int>(png.image.width);
  const int h = static_cast<int>(png.image.height);
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, rgba.data(), 0, nullptr)) {
    throw Error(ErrorKind::kDecodeError,
                path.string() + ": " + png.image.message);
  }
  // Alpha is ignored; only the color channels carry luminance.
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0, n = static_cast<std::size_t>(w) * h; i < n; ++i) {
    rgb[3 * i] = rgba[4 * i];
    rgb[3 * i + 1] = rgba[4 * i + 1];
    rgb[3 * i + 2] = rgba[4 * i + 2];
  }
  return RgbToGray(w, h, rgb);
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes a JPEG; when `header_only` is set only the dimensions are filled.
GrayRaster DecodeJpeg(const std::filesystem::path& path, bool header_only,
                      ImageDims* dims) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::kIoError, path.string());

  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = JpegErrorExit;
  // Declared before setjmp so it stays valid when libjpeg longjmps back.
  std::vector<std::uint8_t> rgb;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorKind::kDecodeError,
                path.string() + ": " + std::string(jerr.message));
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  if (dims != nullptr) {
    *dims = {static_cast<int>(cinfo.image_width),
             static_cast<int>(cinfo.image_height)};
  }
  if (header_only) {
    jpeg_destroy_decompress(&cinfo);
    return {};
  }
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) *
                                    w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return RgbToGray(w, h, rgb);
}

}  // namespace

GrayRaster LoadGray(const std::filesystem::path& path) {
  switch (SniffFormat(path)) {
    case ImageFormat::kPng:
      return LoadPng(path);
    case ImageFormat::kJpeg:
      return DecodeJpeg(path, false, nullptr);
  }
  return {};
}

ImageDims ProbeDims(const std::filesystem::path& path) {
  switch (SniffFormat(path)) {
    case ImageFormat::kPng: {
      PngImage png;
      if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
        throw Error(ErrorKind::kDecodeError,
                    path.string() + ": " + png.image.message);
      }
      return {static_cast<int>(png.image.width),
              static_cast<int>(png.image.height)};
    }
    case ImageFormat::kJpeg: {
      ImageDims dims;
      DecodeJpeg(path, true, &dims);
      return dims;
    }
  }
  return {};
}

void WritePng(const GrayRaster& img, const std::filesystem::path& path) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(img.width());
  png.image.height = static_cast<png_uint_32>(img.height());
  png.image.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png.image, path.c_str(), 0,
                               img.pixels().data(), img.width(), nullptr)) {
    throw Error(ErrorKind::kIoError,
                path.string() + ": " + png.image.message);
  }
}

}  // namespace wildloc
