#include "wildloc/geo.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wildloc/error.h"

namespace wildloc {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

bool GeoRect::IsValid() const {
  return std::isfinite(top_left.lat) && std::isfinite(top_left.lon) &&
         std::isfinite(bottom_right.lat) && std::isfinite(bottom_right.lon) &&
         top_left.lat > bottom_right.lat && top_left.lon != bottom_right.lon;
}

GeoPoint PixelToGeo(const PixelPoint& p, const GeoRect& rect,
                    const ImageDims& dims) {
  // std::lerp is exact at both ends, which keeps (0,0) and (W,H) anchored on
  // the corner coordinates bit-for-bit.
  const double fy = p.y / static_cast<double>(dims.height);
  const double fx = p.x / static_cast<double>(dims.width);
  return {std::lerp(rect.top_left.lat, rect.bottom_right.lat, fy),
          std::lerp(rect.top_left.lon, rect.bottom_right.lon, fx)};
}

PixelPoint GeoToPixel(const GeoPoint& g, const GeoRect& rect,
                      const ImageDims& dims) {
  const double dlat = rect.bottom_right.lat - rect.top_left.lat;
  const double dlon = rect.bottom_right.lon - rect.top_left.lon;
  if (dlat == 0.0 || dlon == 0.0) {
    throw Error(ErrorKind::kDegenerateRect,
                "zero latitude or longitude span in georeference");
  }
  return {dims.width * (g.lon - rect.top_left.lon) / dlon,
          dims.height * (g.lat - rect.top_left.lat) / dlat};
}

double HaversineMeters(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double sdphi = std::sin((phi2 - phi1) / 2.0);
  const double sdlambda = std::sin((b.lon - a.lon) * kDegToRad / 2.0);
  const double h =
      sdphi * sdphi + std::cos(phi1) * std::cos(phi2) * sdlambda * sdlambda;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

PixelPoint QuadCentroid(std::span<const PixelPoint, 4> quad) {
  // Summing in sorted order makes the result independent of vertex order,
  // bit-for-bit.
  std::array<double, 4> xs;
  std::array<double, 4> ys;
  for (std::size_t i = 0; i < 4; ++i) {
    xs[i] = quad[i].x;
    ys[i] = quad[i].y;
  }
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  return {((xs[0] + xs[1]) + (xs[2] + xs[3])) / 4.0,
          ((ys[0] + ys[1]) + (ys[2] + ys[3])) / 4.0};
}

GeoRect RectAroundCenter(const GeoPoint& center, const ImageDims& dims,
                         double meters_per_pixel) {
  const double half_h_m = 0.5 * dims.height * meters_per_pixel;
  const double half_w_m = 0.5 * dims.width * meters_per_pixel;
  const double dlat = half_h_m / kEarthRadiusM / kDegToRad;
  const double dlon =
      half_w_m / (kEarthRadiusM * std::cos(center.lat * kDegToRad)) /
      kDegToRad;
  return {{center.lat + dlat, center.lon - dlon},
          {center.lat - dlat, center.lon + dlon}};
}

}  // namespace wildloc
