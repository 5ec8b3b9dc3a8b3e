#include "wildloc/mapstore.h"

#include <cmath>
#include <fstream>

#include "csv.h"
#include "wildloc/error.h"

namespace wildloc {

MapCatalog LoadCatalog(const std::filesystem::path& csv_path) {
  const auto rows = csv::ReadFile(csv_path, kCatalogHeader);
  if (rows.empty()) {
    throw Error(ErrorKind::kFormatError,
                csv_path.string() + ": catalog lists no tiles");
  }
  MapCatalog catalog;
  catalog.root = csv_path.parent_path();
  for (const csv::Row& row : rows) {
    MapTile tile;
    tile.id = static_cast<int>(catalog.tiles.size());
    tile.filename = row.fields[0];
    if (tile.filename.empty()) {
      throw Error(ErrorKind::kFormatError, csv_path.string() + ":" +
                                               std::to_string(row.line) +
                                               ": empty filename");
    }
    const auto num = [&](int i, std::string_view col) {
      return csv::ParseDouble(row.fields[i], csv_path, row.line, col);
    };
    tile.rect = {{num(1, "top_left_lat"), num(2, "top_left_lon")},
                 {num(3, "bottom_right_lat"), num(4, "bottom_right_lon")}};
    if (!tile.rect.IsValid()) {
      throw Error(ErrorKind::kInvalidGeoRect,
                  csv_path.string() + ":" + std::to_string(row.line) +
                      ": top-left latitude must exceed bottom-right latitude "
                      "and longitudes must differ");
    }
    tile.image_path = catalog.root / tile.filename;
    if (!std::filesystem::is_regular_file(tile.image_path)) {
      throw Error(ErrorKind::kMissingImage, tile.image_path.string());
    }
    tile.dims = ProbeDims(tile.image_path);
    catalog.tiles.push_back(std::move(tile));
  }
  return catalog;
}

void WriteCatalog(const MapCatalog& catalog,
                  const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, csv_path.string());
  out << kCatalogHeader << '\n';
  for (const MapTile& t : catalog.tiles) {
    out << csv::Escape(t.filename) << ','
        << csv::FormatFixed(t.rect.top_left.lat, 15) << ','
        << csv::FormatFixed(t.rect.top_left.lon, 15) << ','
        << csv::FormatFixed(t.rect.bottom_right.lat, 15) << ','
        << csv::FormatFixed(t.rect.bottom_right.lon, 15) << '\n';
  }
  if (!out) throw Error(ErrorKind::kIoError, csv_path.string());
}

std::vector<int> TileOrigins(int extent, int tile, double overlap_frac) {
  const int stride =
      std::max(1, static_cast<int>(std::lround(tile * (1.0 - overlap_frac))));
  const int span = extent - tile;
  const int count = span <= 0 ? 1 : (span + stride - 1) / stride + 1;
  std::vector<int> origins;
  for (int i = 0; i < count; ++i) origins.push_back(std::min(i * stride, span));
  return origins;
}

MapCatalog SliceMosaic(const GrayRaster& mosaic, const GeoRect& rect,
                       const ImageDims& tile_dims, double overlap_frac,
                       const std::filesystem::path& out_dir) {
  if (!rect.IsValid()) {
    throw Error(ErrorKind::kInvalidGeoRect, "mosaic georeference is invalid");
  }
  if (!tile_dims.IsValid() || tile_dims.width > mosaic.width() ||
      tile_dims.height > mosaic.height()) {
    throw Error(ErrorKind::kInvalidTileSpec,
                "tile " + std::to_string(tile_dims.width) + "x" +
                    std::to_string(tile_dims.height) + " does not fit the " +
                    std::to_string(mosaic.width()) + "x" +
                    std::to_string(mosaic.height()) + " mosaic");
  }
  if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) {
    throw Error(ErrorKind::kInvalidTileSpec, "overlap must lie in [0, 1)");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, out_dir.string());

  const auto xs = TileOrigins(mosaic.width(), tile_dims.width, overlap_frac);
  const auto ys = TileOrigins(mosaic.height(), tile_dims.height, overlap_frac);
  MapCatalog catalog;
  catalog.root = out_dir;
  for (std::size_t r = 0; r < ys.size(); ++r) {
    for (std::size_t c = 0; c < xs.size(); ++c) {
      GrayRaster tile(tile_dims.width, tile_dims.height);
      for (int y = 0; y < tile_dims.height; ++y) {
        for (int x = 0; x < tile_dims.width; ++x) {
          tile.at(x, y) = mosaic.at(xs[c] + x, ys[r] + y);
        }
      }
      MapTile t;
      t.id = static_cast<int>(catalog.tiles.size());
      t.filename =
          "tile_r" + std::to_string(r) + "_c" + std::to_string(c) + ".png";
      t.image_path = out_dir / t.filename;
      t.dims = tile_dims;
      const PixelPoint tl{static_cast<double>(xs[c]),
                          static_cast<double>(ys[r])};
      const PixelPoint br{tl.x + tile_dims.width, tl.y + tile_dims.height};
      t.rect = {PixelToGeo(tl, rect, mosaic.dims()),
                PixelToGeo(br, rect, mosaic.dims())};
      WritePng(tile, t.image_path);
      catalog.tiles.push_back(std::move(t));
    }
  }
  WriteCatalog(catalog, out_dir / "catalog.csv");
  return catalog;
}

}  // namespace wildloc
