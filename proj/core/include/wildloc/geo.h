#pragma once

#include <array>
#include <span>

namespace wildloc {

// WGS-84 latitude/longitude in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Georeference of an axis-aligned, north-up image: the geographic position
// of its top-left pixel corner and of its bottom-right pixel corner.
struct GeoRect {
  GeoPoint top_left;
  GeoPoint bottom_right;

  // North above south and a non-zero longitude span.
  bool IsValid() const;

  friend bool operator==(const GeoRect&, const GeoRect&) = default;
};

// Continuous pixel coordinate. Origin at the top-left corner of the image,
// y grows downward; pixel (i, j) covers [i, i+1) x [j, j+1).
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;

  bool IsValid() const { return width >= 1 && height >= 1; }

  friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

// Mean Earth radius used for all metric distances.
inline constexpr double kEarthRadiusM = 6371000.0;

// Linear interpolation of the rect's corners at the fractions x/W and y/H.
// Points outside the image extrapolate.
GeoPoint PixelToGeo(const PixelPoint& p, const GeoRect& rect,
                    const ImageDims& dims);

// Exact algebraic inverse of PixelToGeo. Throws kDegenerateRect when the
// rect has zero latitude or longitude span.
PixelPoint GeoToPixel(const GeoPoint& g, const GeoRect& rect,
                      const ImageDims& dims);

// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double HaversineMeters(const GeoPoint& a, const GeoPoint& b);

// Arithmetic mean of the four vertices.
PixelPoint QuadCentroid(std::span<const PixelPoint, 4> quad);

// Builds a rect of the given metric extent centered at `center`, using the
// local spherical degrees-per-meter at the center latitude.
GeoRect RectAroundCenter(const GeoPoint& center, const ImageDims& dims,
                         double meters_per_pixel);

}  // namespace wildloc
