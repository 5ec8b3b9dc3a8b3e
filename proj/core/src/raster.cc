#include "wildloc/raster.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "wildloc/error.h"

namespace wildloc {

GrayRaster::GrayRaster(int width, int height, std::uint8_t fill)
    : width_(width),
      height_(height),
      pixels_(static_cast<std::size_t>(width) * height, fill) {}

GrayRaster::GrayRaster(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::kInvalidArgument,
                "pixel buffer size does not match " + std::to_string(width) +
                    "x" + std::to_string(height));
  }
}

double GrayRaster::SampleBilinear(double x, double y) const {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  x0 = std::clamp(x0, 0, width_ - 1);
  y0 = std::clamp(y0, 0, height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = at(x0, y0) + fx * (at(x1, y0) - at(x0, y0));
  const double bottom = at(x0, y1) + fx * (at(x1, y1) - at(x0, y1));
  return top + fy * (bottom - top);
}

ValidityMask::ValidityMask(int width, int height, bool fill)
    : width_(width),
      height_(height),
      bits_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {}

std::size_t ValidityMask::CountValid() const {
  return static_cast<std::size_t>(
      std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::pair<double, double> CosSinDegrees(double degrees) {
  double d = std::fmod(degrees, 360.0);
  if (d < 0) d += 360.0;
  if (d == 0.0) return {1.0, 0.0};
  if (d == 90.0) return {0.0, 1.0};
  if (d == 180.0) return {-1.0, 0.0};
  if (d == 270.0) return {0.0, -1.0};
  const double r = d * (3.14159265358979323846 / 180.0);
  return {std::cos(r), std::sin(r)};
}

ImageDims RotatedDims(const ImageDims& src, double degrees) {
  const auto [c, s] = CosSinDegrees(degrees);
  const double w = src.width * std::abs(c) + src.height * std::abs(s);
  const double h = src.width * std::abs(s) + src.height * std::abs(c);
  // The slack absorbs round-off so that e.g. 90 degrees gives exactly H x W.
  return {static_cast<int>(std::ceil(w - 1e-9)),
          static_cast<int>(std::ceil(h - 1e-9))};
}

PixelPoint RotatedCoordinate(const PixelPoint& p, const ImageDims& src,
                             const ImageDims& canvas, double degrees) {
  const auto [c, s] = CosSinDegrees(degrees);
  const double dx = p.x - 0.5 * src.width;
  const double dy = p.y - 0.5 * src.height;
  // Clockwise on screen with y pointing down.
  return {0.5 * canvas.width + c * dx - s * dy,
          0.5 * canvas.height + s * dx + c * dy};
}

std::pair<GrayRaster, ValidityMask> RotateExpand(const GrayRaster& img,
                                                 double degrees) {
  if (!std::isfinite(degrees)) {
    throw Error(ErrorKind::kInvalidArgument, "rotation angle is not finite");
  }
  const ImageDims canvas = RotatedDims(img.dims(), degrees);
  GrayRaster out(canvas.width, canvas.height, 0);
  ValidityMask mask(canvas.width, canvas.height, false);

  const auto [c, s] = CosSinDegrees(degrees);
  const double src_cx = 0.5 * img.width();
  const double src_cy = 0.5 * img.height();
  const double dst_cx = 0.5 * canvas.width;
  const double dst_cy = 0.5 * canvas.height;
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  constexpr double kEps = 1e-9;

  for (int v = 0; v < canvas.height; ++v) {
    const double dy = v + 0.5 - dst_cy;
    for (int u = 0; u < canvas.width; ++u) {
      const double dx = u + 0.5 - dst_cx;
      // Inverse rotation back into source index coordinates.
      double sx = c * dx + s * dy + src_cx - 0.5;
      double sy = -s * dx + c * dy + src_cy - 0.5;
      if (sx < -kEps || sy < -kEps || sx > max_x + kEps || sy > max_y + kEps) {
        continue;
      }
      sx = std::clamp(sx, 0.0, max_x);
      sy = std::clamp(sy, 0.0, max_y);
      out.at(u, v) = static_cast<std::uint8_t>(
          std::lround(std::clamp(img.SampleBilinear(sx, sy), 0.0, 255.0)));
      mask.set(u, v, true);
    }
  }
  return {std::move(out), std::move(mask)};
}

GrayRaster Downsample2x2(const GrayRaster& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  GrayRaster out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sum = img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                      img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
    }
  }
  return out;
}

GrayRaster ResizeHalf(const GrayRaster& img, int levels) {
  if (levels < 0) {
    throw Error(ErrorKind::kInvalidArgument, "negative resize level count");
  }
  if (levels == 0) return img;
  const int w = img.width() >> levels;
  const int h = img.height() >> levels;
  if (levels >= 31 || w < 32 || h < 32) {
    throw Error(ErrorKind::kTooSmall,
                std::to_string(img.width()) + "x" +
                    std::to_string(img.height()) + " cannot be halved " +
                    std::to_string(levels) + " times");
  }
  GrayRaster out = Downsample2x2(img);
  for (int i = 1; i < levels; ++i) out = Downsample2x2(out);
  return out;
}

GrayRaster RgbToGray(int width, int height,
                     const std::vector<std::uint8_t>& rgb) {
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const int r = rgb[3 * i];
    const int g = rgb[3 * i + 1];
    const int b = rgb[3 * i + 2];
    // Integer form of round(0.299 R + 0.587 G + 0.114 B), halves round up.
    gray[i] = static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) /
                                        1000);
  }
  return GrayRaster(width, height, std::move(gray));
}

}  // namespace wildloc
