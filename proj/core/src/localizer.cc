#include "wildloc/localizer.h"

#include <atomic>
#include <cmath>
#include <fstream>
#include <unistd.h>

#include "csv.h"
#include "parallel.h"
#include "wildloc/error.h"
#include "wildloc/external_matcher.h"

namespace wildloc {
namespace {

// Scratch PNG holding the rotated photo for the external matcher.
class ScratchPng {
 public:
  explicit ScratchPng(const GrayRaster& img) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("wildloc-photo-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++) + ".png");
    WritePng(img, path_);
  }
  ~ScratchPng() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  ScratchPng(const ScratchPng&) = delete;
  ScratchPng& operator=(const ScratchPng&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

bool Within(const PixelPoint& p, const ImageDims& d) {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= d.width && p.y <= d.height;
}

// Index into `tiles` of the maximum score; ties go to the lowest tile id.
std::size_t SelectTile(const std::vector<MapTile>& tiles,
                       const std::vector<int>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < tiles.size(); ++i) {
    if (scores[i] > scores[best] ||
        (scores[i] == scores[best] && tiles[i].id < tiles[best].id)) {
      best = i;
    }
  }
  return best;
}

LocalizationResult FailureResult(const std::string& name, const Error& e) {
  LocalizationResult r;
  r.photo = name;
  switch (e.kind()) {
    case ErrorKind::kIoError:
    case ErrorKind::kDecodeError:
      r.status = LocalizationStatus::kDecodeFailure;
      break;
    case ErrorKind::kExternalMatcherError:
    case ErrorKind::kExternalMatcherUnavailable:
      r.status = LocalizationStatus::kMatcherFailure;
      break;
    default:
      r.status = LocalizationStatus::kFailed;
  }
  r.message = std::string(ErrorKindName(e.kind())) + ": " + e.detail();
  return r;
}

}  // namespace

std::string_view StatusName(LocalizationStatus status) {
  switch (status) {
    case LocalizationStatus::kLocalized: return "Localized";
    case LocalizationStatus::kInsufficientMatches: return "InsufficientMatches";
    case LocalizationStatus::kNoModel: return "NoModel";
    case LocalizationStatus::kDecodeFailure: return "DecodeFailure";
    case LocalizationStatus::kMatcherFailure: return "MatcherFailure";
    case LocalizationStatus::kFailed: return "Failed";
  }
  return "Failed";
}

std::vector<PhotoMeta> LoadPhotoMeta(const std::filesystem::path& csv_path) {
  std::vector<PhotoMeta> metas;
  for (const csv::Row& row : csv::ReadFile(csv_path, kPhotoMetaHeader)) {
    PhotoMeta m;
    m.filename = row.fields[0];
    if (m.filename.empty()) {
      throw Error(ErrorKind::kFormatError, csv_path.string() + ":" +
                                               std::to_string(row.line) +
                                               ": empty filename");
    }
    m.gimbal_yaw =
        csv::ParseDouble(row.fields[1], csv_path, row.line, "gimbal_yaw_deg");
    m.drone_yaw =
        csv::ParseDouble(row.fields[2], csv_path, row.line, "drone_yaw_deg");
    const auto lat =
        csv::ParseOptionalDouble(row.fields[3], csv_path, row.line, "gnss_lat");
    const auto lon =
        csv::ParseOptionalDouble(row.fields[4], csv_path, row.line, "gnss_lon");
    if (lat.has_value() != lon.has_value()) {
      throw Error(ErrorKind::kFormatError,
                  csv_path.string() + ":" + std::to_string(row.line) +
                      ": gnss_lat and gnss_lon must both be set or both empty");
    }
    if (lat) {
      if (std::abs(*lat) > 90.0 || std::abs(*lon) > 180.0) {
        throw Error(ErrorKind::kFormatError,
                    csv_path.string() + ":" + std::to_string(row.line) +
                        ": GNSS coordinate out of range");
      }
      m.gnss = GeoPoint{*lat, *lon};
    }
    m.altitude_m = csv::ParseOptionalDouble(row.fields[5], csv_path, row.line,
                                            "altitude_m");
    metas.push_back(std::move(m));
  }
  return metas;
}

void WritePhotoMeta(const std::vector<PhotoMeta>& metas,
                    const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIoError, csv_path.string());
  out << kPhotoMetaHeader << '\n';
  for (const PhotoMeta& m : metas) {
    out << csv::Escape(m.filename) << ',' << csv::FormatFixed(m.gimbal_yaw, 6)
        << ',' << csv::FormatFixed(m.drone_yaw, 6) << ',';
    if (m.gnss) {
      out << csv::FormatFixed(m.gnss->lat, 15) << ','
          << csv::FormatFixed(m.gnss->lon, 15);
    } else {
      out << ',';
    }
    out << ',';
    if (m.altitude_m) out << csv::FormatFixed(*m.altitude_m, 3);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIoError, csv_path.string());
}

void ValidateConfig(const LocalizerConfig& cfg) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kConfigError, what);
  };
  if (cfg.min_raw_matches < 4) fail("min_raw_matches must be >= 4");
  if (cfg.min_inliers < 4) fail("min_inliers must be >= 4");
  if (!std::isfinite(cfg.yaw_correction_deg)) fail("yaw correction not finite");
  if (!(cfg.ransac.threshold_px > 0.0)) fail("ransac threshold must be > 0");
  if (cfg.ransac.max_iters < 1) fail("ransac iterations must be >= 1");
  if (!(cfg.ransac.confidence > 0.0 && cfg.ransac.confidence < 1.0)) {
    fail("ransac confidence must lie in (0, 1)");
  }
  if (cfg.matcher.fast_threshold < 1) fail("fast threshold must be >= 1");
  if (cfg.matcher.max_keypoints < 1) fail("max keypoints must be >= 1");
  if (!(cfg.matcher.ratio > 0.0 && cfg.matcher.ratio <= 1.0)) {
    fail("ratio must lie in (0, 1]");
  }
  if (cfg.resize_levels < 0) fail("resize levels must be >= 0");
  if (cfg.jobs < 1) fail("jobs must be >= 1");
  if (cfg.matcher.kind == MatcherKind::kExternal &&
      cfg.matcher.external_command.empty()) {
    fail("external matcher selected without a matcher command");
  }
}

Localizer::Localizer(MapCatalog catalog, LocalizerConfig cfg)
    : catalog_(std::move(catalog)), cfg_(std::move(cfg)) {
  ValidateConfig(cfg_);
  if (catalog_.tiles.empty()) {
    throw Error(ErrorKind::kFormatError, "catalog has no tiles");
  }
  const std::size_t n = catalog_.tiles.size();
  tile_dims_.resize(n);
  for (std::size_t i = 0; i < n; ++i) tile_dims_[i] = catalog_.tiles[i].dims;

  if (cfg_.matcher.kind == MatcherKind::kExternal) {
    pool_ = std::make_unique<ExternalMatcherPool>(cfg_.matcher.external_command,
                                                  cfg_.jobs);
    return;
  }
  tile_features_.resize(n);
  internal::ParallelFor(n, cfg_.jobs, [&](std::size_t i) {
    const GrayRaster tile = LoadGray(catalog_.tiles[i].image_path);
    tile_dims_[i] = tile.dims();
    tile_features_[i] = ExtractFeatures(tile, nullptr, cfg_.matcher);
  });
}

Localizer::~Localizer() = default;

LocalizationResult Localizer::Localize(const std::filesystem::path& photo_path,
                                       const PhotoMeta& meta) const {
  const GrayRaster photo = LoadGray(photo_path);
  return Run(photo, meta, meta.filename.empty() ? photo_path.filename().string()
                                                : meta.filename,
             cfg_.jobs);
}

LocalizationResult Localizer::LocalizeRaster(const GrayRaster& photo,
                                             const PhotoMeta& meta,
                                             const std::string& name) const {
  return Run(photo, meta, name, cfg_.jobs);
}

LocalizationResult Localizer::Run(const GrayRaster& photo,
                                  const PhotoMeta& meta,
                                  const std::string& name, int jobs) const {
  LocalizationResult result;
  result.photo = name;

  // (1) Bring the photo to map scale and rotate it north-up.
  const GrayRaster scaled = ResizeHalf(photo, cfg_.resize_levels);
  const double yaw = meta.gimbal_yaw + meta.drone_yaw + cfg_.yaw_correction_deg;
  auto rotation = RotateExpand(scaled, yaw);
  const GrayRaster& rotated = rotation.first;
  const ValidityMask& mask = rotation.second;

  // (2) Match against every tile.
  const std::size_t n = catalog_.tiles.size();
  std::vector<std::vector<MatchPair>> matches(n);
  if (pool_) {
    const ScratchPng scratch(rotated);
    internal::ParallelFor(n, jobs, [&](std::size_t i) {
      auto lease = pool_->Acquire();
      auto pairs = lease->MatchFiles(scratch.path(),
                                     catalog_.tiles[i].image_path);
      std::erase_if(pairs, [&](const MatchPair& m) {
        if (!Within(m.a, rotated.dims()) || !Within(m.b, tile_dims_[i])) {
          return true;
        }
        const int x = std::min(static_cast<int>(m.a.x), mask.width() - 1);
        const int y = std::min(static_cast<int>(m.a.y), mask.height() - 1);
        return !mask.valid(x, y);
      });
      matches[i] = std::move(pairs);
    });
  } else {
    const FeatureSet photo_features =
        ExtractFeatures(rotated, &mask, cfg_.matcher);
    internal::ParallelFor(n, jobs, [&](std::size_t i) {
      matches[i] =
          MatchFeatureSets(photo_features, tile_features_[i], cfg_.matcher);
    });
  }

  // (3) Pick the tile.
  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(matches[i].size());
  std::vector<std::optional<RansacResult>> fits(n);
  std::size_t best;
  if (cfg_.selection == TileSelection::kInliers) {
    std::vector<int> inliers(n, 0);
    internal::ParallelFor(n, jobs, [&](std::size_t i) {
      if (raw[i] < cfg_.min_raw_matches) return;
      try {
        fits[i] = RansacHomography(matches[i], cfg_.ransac);
        inliers[i] = static_cast<int>(fits[i]->report.inlier_indices.size());
      } catch (const Error&) {
      }
    });
    best = SelectTile(catalog_.tiles, inliers);
  } else {
    best = SelectTile(catalog_.tiles, raw);
  }
  const MapTile& tile = catalog_.tiles[best];
  result.best_tile_id = tile.id;
  result.raw_match_count = raw[best];

  // (4) Gate on the raw count.
  if (raw[best] < cfg_.min_raw_matches) {
    result.status = LocalizationStatus::kInsufficientMatches;
    return result;
  }

  // (5) Robust homography, drone frame -> tile frame.
  if (!fits[best]) {
    try {
      fits[best] = RansacHomography(matches[best], cfg_.ransac);
    } catch (const Error& e) {
      result.status = LocalizationStatus::kNoModel;
      result.message = std::string(ErrorKindName(e.kind())) + ": " + e.detail();
      return result;
    }
  }
  if (!fits[best]) {
    result.status = LocalizationStatus::kNoModel;
    return result;
  }
  const RansacResult& fit = *fits[best];
  result.inlier_count = static_cast<int>(fit.report.inlier_indices.size());
  if (result.inlier_count < cfg_.min_inliers) {
    result.status = LocalizationStatus::kNoModel;
    return result;
  }

  // (6) Footprint and its center.
  std::array<PixelPoint, 4> footprint;
  PixelPoint center;
  try {
    footprint = TransformQuad(fit.homography, rotated.dims());
    if (cfg_.center_mode == CenterMode::kQuadMean) {
      center = QuadCentroid(footprint);
    } else {
      center = ApplyHomography(fit.homography, {0.5 * rotated.width(),
                                                0.5 * rotated.height()});
    }
  } catch (const Error& e) {
    result.status = LocalizationStatus::kNoModel;
    result.message = std::string(ErrorKindName(e.kind())) + ": " + e.detail();
    return result;
  }

  // (7) Pixel -> geographic coordinates in the chosen tile.
  const GeoPoint position = PixelToGeo(center, tile.rect, tile_dims_[best]);
  if (!std::isfinite(position.lat) || !std::isfinite(position.lon)) {
    result.status = LocalizationStatus::kNoModel;
    result.message = "non-finite position";
    return result;
  }
  result.status = LocalizationStatus::kLocalized;
  result.footprint = footprint;
  result.position = position;
  return result;
}

std::vector<LocalizationResult> Localizer::LocalizeBatch(
    const std::filesystem::path& photo_dir,
    const std::vector<PhotoMeta>& metas) const {
  std::vector<LocalizationResult> results(metas.size());
  internal::ParallelFor(metas.size(), cfg_.jobs, [&](std::size_t i) {
    const PhotoMeta& meta = metas[i];
    try {
      const GrayRaster photo = LoadGray(photo_dir / meta.filename);
      results[i] = Run(photo, meta, meta.filename, 1);
    } catch (const Error& e) {
      results[i] = FailureResult(meta.filename, e);
    }
  });
  return results;
}

LocalizationResult LocalizePhoto(const std::filesystem::path& photo_path,
                                 const PhotoMeta& meta,
                                 const MapCatalog& catalog,
                                 const LocalizerConfig& cfg) {
  const GrayRaster photo = LoadGray(photo_path);
  return Localizer(catalog, cfg)
      .LocalizeRaster(photo, meta,
                      meta.filename.empty() ? photo_path.filename().string()
                                            : meta.filename);
}

std::vector<LocalizationResult> LocalizeDataset(
    const std::filesystem::path& photo_dir,
    const std::filesystem::path& meta_csv, const MapCatalog& catalog,
    const LocalizerConfig& cfg) {
  const auto metas = LoadPhotoMeta(meta_csv);
  if (metas.empty()) return {};
  return Localizer(catalog, cfg).LocalizeBatch(photo_dir, metas);
}

}  // namespace wildloc
