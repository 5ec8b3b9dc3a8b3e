#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wildloc/geo.h"
#include "wildloc/raster.h"

namespace wildloc {

inline constexpr std::string_view kCatalogHeader =
    "filename,top_left_lat,top_left_lon,bottom_right_lat,bottom_right_lon";

struct MapTile {
  int id = 0;
  // As written in the catalog, relative to the catalog's directory.
  std::string filename;
  std::filesystem::path image_path;
  GeoRect rect;
  ImageDims dims;
};

struct MapCatalog {
  std::vector<MapTile> tiles;
  std::filesystem::path root;
};

// Parses a catalog CSV and opens every referenced image once to record its
// dimensions. Throws kIoError, kFormatError, kInvalidGeoRect or
// kMissingImage (detail = the offending path).
MapCatalog LoadCatalog(const std::filesystem::path& csv_path);

// Writes `catalog` as CSV with 15 decimals per coordinate.
void WriteCatalog(const MapCatalog& catalog,
                  const std::filesystem::path& csv_path);

// Top-left offsets of tiles along one axis: stride = round(tile * (1 -
// overlap)), ceil((extent - tile) / stride) + 1 positions, the last one
// clamped to the far edge.
std::vector<int> TileOrigins(int extent, int tile, double overlap_frac);

// Cuts `mosaic` into a row-major grid of tiles, writes them as PNG into
// `out_dir` together with `catalog.csv`, and returns the catalog. Each
// tile's rect interpolates `rect` at the tile's pixel corners.
MapCatalog SliceMosaic(const GrayRaster& mosaic, const GeoRect& rect,
                       const ImageDims& tile_dims, double overlap_frac,
                       const std::filesystem::path& out_dir);

}  // namespace wildloc
