#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wildloc/geo.h"
#include "wildloc/localizer.h"
#include "wildloc/mapstore.h"
#include "wildloc/raster.h"

namespace wildloc {

// A georeferenced synthetic mosaic with exact ground truth.
struct SynthWorld {
  GrayRaster raster;
  GeoRect rect;
  double gsd_m = 0.5;  // meters per pixel
  std::uint64_t seed = 0;
};

inline constexpr GeoPoint kDefaultWorldCenter{60.4031, 22.4618};
inline constexpr ImageDims kDefaultWorldDims{2048, 2048};
inline constexpr double kDefaultGsdM = 0.5;

// Nadir view of the world. `scale` is the view's meters-per-pixel relative
// to the world's gsd; yaw is the heading of the photo's up direction,
// degrees clockwise from north.
struct ViewSpec {
  GeoPoint center;
  double yaw_deg = 0.0;
  ImageDims view_dims{480, 360};
  double scale = 1.0;
  double noise_sigma = 0.0;       // gray levels
  double brightness_delta = 0.0;  // gray levels
  std::uint64_t noise_seed = 0;
};

// Deterministic terrain: layered value noise with forest and field areas,
// scattered tree crowns, a road network and rectangular buildings.
// Throws kWorldTooSmall below 512 x 512 and kInvalidGeoRect when the rect's
// metric extent disagrees with dims * gsd_m by more than 1%.
SynthWorld GenerateWorld(std::uint64_t seed, const ImageDims& dims,
                         const GeoRect& rect, double gsd_m);

// 2048 x 2048 at 0.5 m/px centered on kDefaultWorldCenter.
SynthWorld GenerateDefaultWorld(std::uint64_t seed);

struct SampledView {
  GrayRaster photo;
  PhotoMeta truth;  // gnss = center, gimbal_yaw = yaw, drone_yaw = 0
};

// Resamples the world through the view's similarity transform (bilinear),
// then adds the brightness offset and seeded Gaussian noise. Throws
// kFootprintOutOfBounds when any view corner falls outside the world.
SampledView SampleView(const SynthWorld& world, const ViewSpec& spec,
                       const std::string& filename = "");

struct ViewSampling {
  int count = 50;
  double max_abs_yaw_deg = 30.0;
  double noise_sigma = 4.0;
  double max_abs_brightness = 10.0;
  ImageDims view_dims{480, 360};
  double scale = 1.0;
  std::uint64_t seed = 0;
};

// Seeded random views whose footprints lie inside the world for any yaw.
std::vector<ViewSpec> RandomViews(const SynthWorld& world,
                                  const ViewSampling& sampling);

struct EmittedDataset {
  std::vector<std::filesystem::path> photos;
  std::filesystem::path meta_csv;
  MapCatalog catalog;
};

// Writes view_NNN.png photos, meta.csv with ground truth, and the world
// sliced into catalog.csv + tiles, all inside `out_dir`.
EmittedDataset EmitDataset(const SynthWorld& world,
                           const std::vector<ViewSpec>& specs,
                           const std::filesystem::path& out_dir,
                           const ImageDims& tile_dims, double overlap);

}  // namespace wildloc
