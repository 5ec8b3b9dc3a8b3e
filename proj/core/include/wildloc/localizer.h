#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wildloc/features.h"
#include "wildloc/geo.h"
#include "wildloc/homography.h"
#include "wildloc/mapstore.h"
#include "wildloc/raster.h"

namespace wildloc {

inline constexpr std::string_view kPhotoMetaHeader =
    "filename,gimbal_yaw_deg,drone_yaw_deg,gnss_lat,gnss_lon,altitude_m";

// Per-photo capture metadata. Yaws are degrees clockwise from north.
struct PhotoMeta {
  std::string filename;
  double gimbal_yaw = 0.0;
  double drone_yaw = 0.0;
  std::optional<GeoPoint> gnss;  // ground truth, when known
  std::optional<double> altitude_m;
};

std::vector<PhotoMeta> LoadPhotoMeta(const std::filesystem::path& csv_path);
void WritePhotoMeta(const std::vector<PhotoMeta>& metas,
                    const std::filesystem::path& csv_path);

enum class TileSelection {
  kRawMatches,  // most matches before RANSAC
  kInliers,     // most RANSAC inliers
};

enum class CenterMode {
  kQuadMean,          // mean of the four footprint vertices
  kHomographyCenter,  // image of the photo center under the homography
};

struct LocalizerConfig {
  // Added to gimbal_yaw + drone_yaw before the photo is rotated north-up.
  double yaw_correction_deg = 0.0;
  int min_raw_matches = 4;
  int min_inliers = 10;
  RansacOptions ransac;
  MatcherConfig matcher;
  int resize_levels = 0;
  CenterMode center_mode = CenterMode::kQuadMean;
  TileSelection selection = TileSelection::kRawMatches;
  // Worker threads for tile preparation, per-tile matching and batches.
  int jobs = 1;
};

// Throws kConfigError on out-of-range values.
void ValidateConfig(const LocalizerConfig& cfg);

enum class LocalizationStatus {
  kLocalized,
  kInsufficientMatches,
  kNoModel,
  kDecodeFailure,
  kMatcherFailure,
  kFailed,
};

std::string_view StatusName(LocalizationStatus status);

struct LocalizationResult {
  LocalizationStatus status = LocalizationStatus::kFailed;
  std::string photo;
  std::optional<int> best_tile_id;
  int raw_match_count = 0;
  int inlier_count = 0;
  std::optional<std::array<PixelPoint, 4>> footprint;  // tile frame
  std::optional<GeoPoint> position;
  std::string message;  // error detail for failure statuses
};

// Localizes photos against a fixed catalog. Tile features for the builtin
// matcher are computed once at construction; bridge processes for the
// external matcher are started once and pooled.
class Localizer {
 public:
  Localizer(MapCatalog catalog, LocalizerConfig cfg);
  ~Localizer();

  Localizer(const Localizer&) = delete;
  Localizer& operator=(const Localizer&) = delete;

  const MapCatalog& catalog() const { return catalog_; }
  const LocalizerConfig& config() const { return cfg_; }

  // Throws kIoError / kDecodeError when the photo cannot be read.
  LocalizationResult Localize(const std::filesystem::path& photo_path,
                              const PhotoMeta& meta) const;

  // `name` is reported as the result's photo field.
  LocalizationResult LocalizeRaster(const GrayRaster& photo,
                                    const PhotoMeta& meta,
                                    const std::string& name) const;

  // One result per entry, in order; read and matcher failures become
  // statuses instead of exceptions.
  std::vector<LocalizationResult> LocalizeBatch(
      const std::filesystem::path& photo_dir,
      const std::vector<PhotoMeta>& metas) const;

 private:
  LocalizationResult Run(const GrayRaster& photo, const PhotoMeta& meta,
                         const std::string& name, int jobs) const;

  MapCatalog catalog_;
  LocalizerConfig cfg_;
  std::vector<FeatureSet> tile_features_;
  std::vector<ImageDims> tile_dims_;
  std::unique_ptr<class ExternalMatcherPool> pool_;
};

LocalizationResult LocalizePhoto(const std::filesystem::path& photo_path,
                                 const PhotoMeta& meta,
                                 const MapCatalog& catalog,
                                 const LocalizerConfig& cfg);

// Throws only for an unreadable or malformed metadata CSV.
std::vector<LocalizationResult> LocalizeDataset(
    const std::filesystem::path& photo_dir,
    const std::filesystem::path& meta_csv, const MapCatalog& catalog,
    const LocalizerConfig& cfg);

}  // namespace wildloc
