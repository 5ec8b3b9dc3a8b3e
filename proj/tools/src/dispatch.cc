#include "wildloc_cli/dispatch.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "wildloc/error.h"
#include "wildloc/evalkit.h"
#include "wildloc/features.h"
#include "wildloc/homography.h"
#include "wildloc/localizer.h"
#include "wildloc/mapstore.h"
#include "wildloc/raster.h"
#include "wildloc/synth.h"
#include "wildloc_cli/settings.h"

namespace wildloc::cli {
namespace {

namespace fs = std::filesystem;

std::string Fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') {
    s.erase(0, 1);
  }
  return s;
}

// Tuning flags shared by the subcommands that run the localizer. Values are
// kept as text and applied through ApplySetting after the config file.
class TuningFlags {
 public:
  CLI::Option* Add(CLI::App* app, const std::string& flag,
                   const std::string& key, const std::string& help) {
    auto* opt = app->add_option(flag, values_[key], help);
    options_.emplace_back(opt, key);
    return opt;
  }

  void AddLocalizer(CLI::App* app) {
    app->add_option("--config", config_,
                    "key = value settings file (default: $WILDLOC_CONFIG)");
    Add(app, "--seed", "seed", "RANSAC seed")
        ->check(CLI::NonNegativeNumber);
    Add(app, "--yaw-correction", "yaw_correction",
        "degrees added to gimbal + drone yaw")
        ->check(CLI::Number);
    Add(app, "--min-inliers", "min_inliers", "RANSAC inlier floor")
        ->check(CLI::PositiveNumber);
    Add(app, "--ransac-threshold", "ransac_threshold",
        "RANSAC reprojection bound in pixels")
        ->check(CLI::PositiveNumber);
    Add(app, "--matcher", "matcher", "builtin or external")
        ->check(CLI::IsMember({"builtin", "external"}));
    Add(app, "--matcher-cmd", "matcher_cmd",
        "shell command starting an external matcher bridge");
    Add(app, "--jobs", "jobs", "worker threads")
        ->check(CLI::PositiveNumber);
  }

  Settings Resolve() const {
    Settings s = DefaultSettings();
    std::string config = config_;
    if (config.empty()) {
      if (const char* env = std::getenv("WILDLOC_CONFIG"); env != nullptr) {
        config = env;
      }
    }
    if (!config.empty()) ApplyConfigFile(s, config);
    for (const auto& [opt, key] : options_) {
      if (opt->count() > 0) ApplySetting(s, key, values_.at(key));
    }
    return s;
  }

 private:
  std::string config_;
  std::map<std::string, std::string> values_;
  std::vector<std::pair<CLI::Option*, std::string>> options_;
};

GeoPoint ParseGeoPoint(const std::string& text, const std::string& flag) {
  const auto comma = text.find(',');
  GeoPoint g;
  auto parse = [&](std::string_view part, double& out) {
    const auto [p, ec] =
        std::from_chars(part.data(), part.data() + part.size(), out);
    return ec == std::errc() && p == part.data() + part.size();
  };
  if (comma == std::string::npos ||
      !parse(std::string_view(text).substr(0, comma), g.lat) ||
      !parse(std::string_view(text).substr(comma + 1), g.lon)) {
    throw Error(ErrorKind::kInvalidArgument,
                flag + " expects LAT,LON, got '" + text + "'");
  }
  return g;
}

void PrintLocalizeLine(const LocalizationResult& r, std::ostream& out) {
  out << StatusName(r.status) << ' '
      << (r.position ? Fixed(r.position->lat, 9) : "-") << ' '
      << (r.position ? Fixed(r.position->lon, 9) : "-") << ' '
      << (r.best_tile_id ? std::to_string(*r.best_tile_id) : "-") << ' '
      << r.raw_match_count << ' ' << r.inlier_count << '\n';
}

}  // namespace

int Dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{
      "Absolute localization of aerial photographs against a georeferenced "
      "tile catalog.",
      "wildloc"};
  app.require_subcommand(1);

  // build-map
  auto* build = app.add_subcommand(
      "build-map", "Slice a georeferenced mosaic into a tile catalog");
  std::string mosaic_path, top_left, bottom_right, build_out;
  int tile_w = 1400, tile_h = 1200;
  double overlap = 0.0;
  build->add_option("--mosaic", mosaic_path, "mosaic image (PNG/JPEG)")
      ->required();
  build->add_option("--top-left", top_left, "LAT,LON of the top-left corner")
      ->required();
  build->add_option("--bottom-right", bottom_right,
                    "LAT,LON of the bottom-right corner")
      ->required();
  build->add_option("--tile-width", tile_w, "tile width in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build->add_option("--tile-height", tile_h, "tile height in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  build->add_option("--overlap", overlap, "overlap fraction in [0,1)")
      ->check(CLI::Range(0.0, 0.999999))
      ->capture_default_str();
  build->add_option("--out", build_out, "output directory")->required();

  // localize
  auto* localize =
      app.add_subcommand("localize", "Localize one photograph");
  std::string photo, map_csv, meta_csv;
  double gimbal_yaw = 0.0, drone_yaw = 0.0;
  TuningFlags localize_flags;
  localize->add_option("--photo", photo, "photograph (PNG/JPEG)")->required();
  localize->add_option("--map", map_csv, "catalog CSV")->required();
  auto* meta_opt = localize->add_option(
      "--meta", meta_csv, "metadata CSV; the row naming the photo is used");
  auto* gimbal_opt =
      localize->add_option("--gimbal-yaw", gimbal_yaw, "gimbal yaw, degrees");
  auto* drone_opt =
      localize->add_option("--drone-yaw", drone_yaw, "drone yaw, degrees");
  meta_opt->excludes(gimbal_opt)->excludes(drone_opt);
  localize_flags.AddLocalizer(localize);

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Localize a batch and report errors against ground truth");
  std::string photos_dir, eval_meta, eval_map, eval_out, threshold_m;
  TuningFlags evaluate_flags;
  evaluate->add_option("--photos", photos_dir, "photo directory")->required();
  evaluate->add_option("--meta", eval_meta, "metadata CSV")->required();
  evaluate->add_option("--map", eval_map, "catalog CSV")->required();
  evaluate->add_option("--out", eval_out, "report directory")->required();
  evaluate_flags.AddLocalizer(evaluate);
  evaluate_flags
      .Add(evaluate, "--threshold-m", "threshold_m",
           "success threshold in meters")
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic ground-truth dataset");
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  int views = 50, synth_tile = 1024;
  double synth_overlap = 0.25;
  synth->add_option("--seed", synth_seed, "world and view seed")
      ->capture_default_str();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--views", views, "number of photos")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  synth->add_option("--tile", synth_tile, "square tile size in pixels")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--overlap", synth_overlap, "tile overlap fraction")
      ->check(CLI::Range(0.0, 0.999999))
      ->capture_default_str();

  // match
  auto* match = app.add_subcommand(
      "match", "Match two images and fit a homography (debugging aid)");
  std::string image_a, image_b;
  TuningFlags match_flags;
  match->add_option("image_a", image_a, "first image")->required();
  match->add_option("image_b", image_b, "second image")->required();
  match_flags.AddLocalizer(match);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (build->parsed()) {
      const GeoRect rect{ParseGeoPoint(top_left, "--top-left"),
                         ParseGeoPoint(bottom_right, "--bottom-right")};
      const GrayRaster mosaic = LoadGray(mosaic_path);
      const MapCatalog catalog =
          SliceMosaic(mosaic, rect, {tile_w, tile_h}, overlap, build_out);
      out << "tiles " << catalog.tiles.size() << '\n';
    } else if (localize->parsed()) {
      const Settings s = localize_flags.Resolve();
      ValidateConfig(s.localizer);
      const GrayRaster raster = LoadGray(photo);
      PhotoMeta meta;
      meta.filename = fs::path(photo).filename().string();
      if (!meta_csv.empty()) {
        const auto metas = LoadPhotoMeta(meta_csv);
        const auto it =
            std::find_if(metas.begin(), metas.end(), [&](const PhotoMeta& m) {
              return m.filename == meta.filename;
            });
        if (it == metas.end()) {
          throw Error(ErrorKind::kFormatError,
                      meta_csv + ": no row for " + meta.filename);
        }
        meta = *it;
      } else {
        meta.gimbal_yaw = gimbal_yaw;
        meta.drone_yaw = drone_yaw;
      }
      const Localizer localizer(LoadCatalog(map_csv), s.localizer);
      PrintLocalizeLine(localizer.LocalizeRaster(raster, meta, meta.filename),
                        out);
    } else if (evaluate->parsed()) {
      const Settings s = evaluate_flags.Resolve();
      ValidateConfig(s.localizer);
      const MapCatalog catalog = LoadCatalog(eval_map);
      const auto truth = LoadPhotoMeta(eval_meta);
      const Localizer localizer(catalog, s.localizer);
      const auto results = localizer.LocalizeBatch(photos_dir, truth);
      const auto errors = ComputeErrors(results, truth);
      const EvalSummary summary = Summarize(errors, s.threshold_m);
      EmitReport(results, truth, summary, eval_out);
      out << "photos " << summary.n_total << '\n'
          << "localized " << summary.n_localized << '\n'
          << "success " << summary.n_success << '\n'
          << "mae_m " << (summary.mae_m ? Fixed(*summary.mae_m, 3) : "-")
          << '\n';
    } else if (synth->parsed()) {
      const SynthWorld world = GenerateDefaultWorld(synth_seed);
      ViewSampling sampling;
      sampling.count = views;
      sampling.seed = synth_seed;
      const auto specs = RandomViews(world, sampling);
      const EmittedDataset ds = EmitDataset(
          world, specs, synth_out, {synth_tile, synth_tile}, synth_overlap);
      out << "photos " << ds.photos.size() << '\n'
          << "tiles " << ds.catalog.tiles.size() << '\n';
    } else if (match->parsed()) {
      const Settings s = match_flags.Resolve();
      ValidateConfig(s.localizer);
      const GrayRaster a = LoadGray(image_a);
      const GrayRaster b = LoadGray(image_b);
      const auto pairs = MatchImages({&a, nullptr, image_a},
                                     {&b, nullptr, image_b},
                                     s.localizer.matcher);
      out << "matches " << pairs.size() << '\n';
      std::optional<RansacResult> fit;
      if (pairs.size() >= 4) {
        try {
          fit = RansacHomography(pairs, s.localizer.ransac);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::kNoModelFound &&
              e.kind() != ErrorKind::kDegenerateConfiguration) {
            throw;
          }
        }
      }
      if (!fit) {
        out << "inliers 0\nhomography -\n";
      } else {
        out << "inliers " << fit->report.inlier_indices.size() << '\n'
            << "rms_px " << Fixed(fit->report.reprojection_rms, 4) << '\n';
        const auto& m = fit->homography.matrix();
        out << "homography";
        for (int r = 0; r < 3; ++r) {
          for (int c = 0; c < 3; ++c) out << ' ' << Fixed(m(r, c), 9);
        }
        out << '\n';
      }
    }
  } catch (const Error& e) {
    err << "error: " << ErrorKindName(e.kind()) << ": " << e.detail() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace wildloc::cli
