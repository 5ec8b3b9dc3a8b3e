#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "wildloc/geo.h"

namespace wildloc {

// Row-major single-channel 8-bit image.
class GrayRaster {
 public:
  GrayRaster() = default;
  GrayRaster(int width, int height, std::uint8_t fill = 0);
  GrayRaster(int width, int height, std::vector<std::uint8_t> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  ImageDims dims() const { return {width_, height_}; }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  // Bilinear sample at index coordinates (pixel centers sit on integers).
  // The caller guarantees 0 <= x <= width-1 and 0 <= y <= height-1.
  double SampleBilinear(double x, double y) const;

  friend bool operator==(const GrayRaster&, const GrayRaster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Per-pixel validity: true = real image content, false = synthetic fill.
class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int width, int height, bool fill = true);

  int width() const { return width_; }
  int height() const { return height_; }

  bool valid(int x, int y) const {
    return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool v) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
  }
  std::size_t CountValid() const;

  friend bool operator==(const ValidityMask& a, const ValidityMask& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.bits_ == b.bits_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Cosine and sine of an angle in degrees; multiples of 90 degrees are exact.
std::pair<double, double> CosSinDegrees(double degrees);

// Rotates the image content clockwise by `degrees` about its center onto a
// canvas sized to the rotated bounding box. Fill pixels are 0 and invalid.
std::pair<GrayRaster, ValidityMask> RotateExpand(const GrayRaster& img,
                                                 double degrees);

// Maps a continuous coordinate of the source image into the canvas produced
// by RotateExpand with the same arguments.
PixelPoint RotatedCoordinate(const PixelPoint& p, const ImageDims& src,
                             const ImageDims& canvas, double degrees);

// Canvas size produced by RotateExpand.
ImageDims RotatedDims(const ImageDims& src, double degrees);

// One 2x2 box-filter halving step, round-half-up; odd trailing rows and
// columns are dropped.
GrayRaster Downsample2x2(const GrayRaster& img);

// `levels` successive Downsample2x2 steps. Throws kTooSmall when the result
// would be narrower or shorter than 32 pixels.
GrayRaster ResizeHalf(const GrayRaster& img, int levels);

// ---- File I/O (PNG and JPEG) ----

// Decodes a PNG or JPEG and converts it to luminance with
// round(0.299 R + 0.587 G + 0.114 B).
GrayRaster LoadGray(const std::filesystem::path& path);

// Reads only the header of a PNG or JPEG.
ImageDims ProbeDims(const std::filesystem::path& path);

void WritePng(const GrayRaster& img, const std::filesystem::path& path);

// Converts interleaved 8-bit RGB to luminance.
GrayRaster RgbToGray(int width, int height,
                     const std::vector<std::uint8_t>& rgb);

}  // namespace wildloc
