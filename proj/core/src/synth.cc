#include "wildloc/synth.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "random.h"
#include "wildloc/error.h"

namespace wildloc {
namespace {

using internal::Rng;

// Smoothly interpolated lattice noise in [0, 1] with the given period.
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int width, int height, int period)
      : period_(period),
        cols_(width / period + 2),
        rows_(height / period + 2),
        lattice_(static_cast<std::size_t>(cols_) * rows_) {
    for (double& v : lattice_) v = rng.Uniform();
  }

  double operator()(int x, int y) const {
    const double gx = static_cast<double>(x) / period_;
    const double gy = static_cast<double>(y) / period_;
    const int ix = static_cast<int>(gx);
    const int iy = static_cast<int>(gy);
    const double tx = Smooth(gx - ix);
    const double ty = Smooth(gy - iy);
    const double a = At(ix, iy) + tx * (At(ix + 1, iy) - At(ix, iy));
    const double b = At(ix, iy + 1) + tx * (At(ix + 1, iy + 1) - At(ix, iy + 1));
    return a + ty * (b - a);
  }

 private:
  static double Smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double At(int x, int y) const {
    return lattice_[static_cast<std::size_t>(y) * cols_ + x];
  }

  int period_;
  int cols_;
  int rows_;
  std::vector<double> lattice_;
};

void StampDisk(std::vector<double>& img, int w, int h, double cx, double cy,
               double radius, double value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + radius)));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r2) {
        img[static_cast<std::size_t>(y) * w + x] = value;
      }
    }
  }
}

void CheckMetricExtent(const ImageDims& dims, const GeoRect& rect,
                       double gsd_m) {
  const double mid_lat = 0.5 * (rect.top_left.lat + rect.bottom_right.lat);
  const double mid_lon = 0.5 * (rect.top_left.lon + rect.bottom_right.lon);
  const double width_m = HaversineMeters({mid_lat, rect.top_left.lon},
                                         {mid_lat, rect.bottom_right.lon});
  const double height_m = HaversineMeters({rect.top_left.lat, mid_lon},
                                          {rect.bottom_right.lat, mid_lon});
  const double want_w = dims.width * gsd_m;
  const double want_h = dims.height * gsd_m;
  if (std::abs(width_m - want_w) > 0.01 * want_w ||
      std::abs(height_m - want_h) > 0.01 * want_h) {
    throw Error(ErrorKind::kInvalidGeoRect,
                "world rect spans " + std::to_string(width_m) + " x " +
                    std::to_string(height_m) + " m, expected " +
                    std::to_string(want_w) + " x " + std::to_string(want_h));
  }
}

}  // namespace

SynthWorld GenerateWorld(std::uint64_t seed, const ImageDims& dims,
                         const GeoRect& rect, double gsd_m) {
  if (dims.width < 512 || dims.height < 512) {
    throw Error(ErrorKind::kWorldTooSmall,
                std::to_string(dims.width) + "x" + std::to_string(dims.height) +
                    " is below the 512x512 minimum");
  }
  if (!rect.IsValid()) {
    throw Error(ErrorKind::kInvalidGeoRect, "world rect is invalid");
  }
  if (!(gsd_m > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "gsd must be positive");
  }
  CheckMetricExtent(dims, rect, gsd_m);

  const int w = dims.width;
  const int h = dims.height;
  Rng rng(seed);

  // Background: multi-octave value noise, darker where the low-frequency
  // land-cover field says forest.
  const ValueNoise cover(rng, w, h, 320);
  const std::array<ValueNoise, 4> octaves = {
      ValueNoise(rng, w, h, 192), ValueNoise(rng, w, h, 96),
      ValueNoise(rng, w, h, 48), ValueNoise(rng, w, h, 12)};
  constexpr std::array<double, 4> kAmplitude = {0.5, 0.25, 0.15, 0.10};

  std::vector<double> img(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> forest(img.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double n = 0.0;
      for (std::size_t k = 0; k < octaves.size(); ++k) {
        n += kAmplitude[k] * octaves[k](x, y);
      }
      const bool is_forest = cover(x, y) > 0.5;
      forest[static_cast<std::size_t>(y) * w + x] = is_forest;
      img[static_cast<std::size_t>(y) * w + x] =
          (is_forest ? 85.0 : 120.0) + 90.0 * n;
    }
  }

  // Tree crowns: dense in forest; shrubs and boulders scattered in fields.
  const int candidates = w * h / 45;
  for (int i = 0; i < candidates; ++i) {
    const double cx = rng.Uniform(0.0, w);
    const double cy = rng.Uniform(0.0, h);
    const double radius = rng.Uniform(1.5, 4.0);
    const double keep = rng.Uniform();
    const bool in_forest =
        forest[static_cast<std::size_t>(cy) * w + static_cast<std::size_t>(cx)];
    if (in_forest) {
      if (keep < 0.8) {
        StampDisk(img, w, h, cx, cy, radius, rng.Uniform(10.0, 50.0));
      }
    } else if (keep < 0.12) {
      const double tone = keep < 0.08 ? rng.Uniform(20.0, 60.0)
                                      : rng.Uniform(210.0, 250.0);
      StampDisk(img, w, h, cx, cy, 0.7 * radius, tone);
    }
  }

  // Roads: bright meandering polylines entering from a random border.
  const int roads = rng.Int(6, 12);
  for (int r = 0; r < roads; ++r) {
    double x;
    double y;
    double heading;
    const int side = rng.Int(0, 3);
    const double along = rng.Uniform(0.1, 0.9);
    switch (side) {
      case 0: x = along * w; y = 0; heading = std::numbers::pi / 2; break;
      case 1: x = w - 1; y = along * h; heading = std::numbers::pi; break;
      case 2: x = along * w; y = h - 1; heading = -std::numbers::pi / 2; break;
      default: x = 0; y = along * h; heading = 0; break;
    }
    const double width = rng.Uniform(3.0, 8.0);
    const double tone = rng.Uniform(190.0, 230.0);
    for (int step = 0; step < 4 * (w + h); ++step) {
      if (step % 40 == 0) heading += rng.Uniform(-0.35, 0.35);
      x += std::cos(heading);
      y += std::sin(heading);
      if (x < -10 || y < -10 || x > w + 10 || y > h + 10) break;
      StampDisk(img, w, h, x, y, 0.5 * width, tone);
    }
  }

  // Buildings.
  const int buildings = rng.Int(10, 50);
  for (int b = 0; b < buildings; ++b) {
    const int bw = rng.Int(12, 40);
    const int bh = rng.Int(12, 40);
    const int bx = rng.Int(0, w - bw - 1);
    const int by = rng.Int(0, h - bh - 1);
    const double roof = rng.Uniform() < 0.5 ? rng.Uniform(200.0, 250.0)
                                            : rng.Uniform(30.0, 60.0);
    for (int y = by; y < by + bh; ++y) {
      for (int x = bx; x < bx + bw; ++x) {
        img[static_cast<std::size_t>(y) * w + x] = roof;
      }
    }
  }

  GrayRaster raster(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) {
    raster.pixels()[i] =
        static_cast<std::uint8_t>(std::lround(std::clamp(img[i], 0.0, 255.0)));
  }
  return {std::move(raster), rect, gsd_m, seed};
}

SynthWorld GenerateDefaultWorld(std::uint64_t seed) {
  return GenerateWorld(
      seed, kDefaultWorldDims,
      RectAroundCenter(kDefaultWorldCenter, kDefaultWorldDims, kDefaultGsdM),
      kDefaultGsdM);
}

SampledView SampleView(const SynthWorld& world, const ViewSpec& spec,
                       const std::string& filename) {
  const ImageDims wd = world.raster.dims();
  const ImageDims vd = spec.view_dims;
  if (!vd.IsValid() || !(spec.scale > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid view size or scale");
  }
  const PixelPoint c = GeoToPixel(spec.center, world.rect, wd);
  const auto [cs, sn] = CosSinDegrees(spec.yaw_deg);
  const double half_w = 0.5 * vd.width;
  const double half_h = 0.5 * vd.height;
  // Photo offset d (y down) lands at world offset scale * R(yaw) d, with R
  // the clockwise screen rotation: the photo's up axis points at `yaw`.
  const auto to_world = [&](double u, double v) {
    const double dx = spec.scale * (u - half_w);
    const double dy = spec.scale * (v - half_h);
    return PixelPoint{c.x + cs * dx - sn * dy, c.y + sn * dx + cs * dy};
  };

  constexpr double kEps = 1e-9;
  for (const auto& [u, v] : {std::pair{0.0, 0.0}, std::pair{1.0 * vd.width, 0.0},
                             std::pair{1.0 * vd.width, 1.0 * vd.height},
                             std::pair{0.0, 1.0 * vd.height}}) {
    const PixelPoint p = to_world(u, v);
    if (p.x < 0.5 - kEps || p.y < 0.5 - kEps || p.x > wd.width - 0.5 + kEps ||
        p.y > wd.height - 0.5 + kEps) {
      throw Error(ErrorKind::kFootprintOutOfBounds,
                  "view corner (" + std::to_string(p.x) + ", " +
                      std::to_string(p.y) + ") lies outside the world");
    }
  }

  Rng rng(spec.noise_seed);
  GrayRaster photo(vd.width, vd.height);
  const double max_x = wd.width - 1;
  const double max_y = wd.height - 1;
  for (int v = 0; v < vd.height; ++v) {
    for (int u = 0; u < vd.width; ++u) {
      const PixelPoint p = to_world(u + 0.5, v + 0.5);
      double value = world.raster.SampleBilinear(
          std::clamp(p.x - 0.5, 0.0, max_x), std::clamp(p.y - 0.5, 0.0, max_y));
      value += spec.brightness_delta;
      if (spec.noise_sigma > 0.0) value += spec.noise_sigma * rng.Normal();
      photo.at(u, v) =
          static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
    }
  }

  SampledView out;
  out.photo = std::move(photo);
  out.truth.filename = filename;
  out.truth.gimbal_yaw = spec.yaw_deg;
  out.truth.drone_yaw = 0.0;
  out.truth.gnss = spec.center;
  return out;
}

std::vector<ViewSpec> RandomViews(const SynthWorld& world,
                                  const ViewSampling& sampling) {
  const ImageDims wd = world.raster.dims();
  const double radius =
      0.5 * sampling.scale *
          std::hypot(sampling.view_dims.width, sampling.view_dims.height) +
      2.0;
  if (2.0 * radius >= std::min(wd.width, wd.height)) {
    throw Error(ErrorKind::kFootprintOutOfBounds,
                "views do not fit inside the world");
  }
  Rng rng(sampling.seed);
  std::vector<ViewSpec> specs;
  for (int i = 0; i < sampling.count; ++i) {
    ViewSpec s;
    const PixelPoint c{rng.Uniform(radius, wd.width - radius),
                       rng.Uniform(radius, wd.height - radius)};
    s.center = PixelToGeo(c, world.rect, wd);
    s.yaw_deg =
        rng.Uniform(-sampling.max_abs_yaw_deg, sampling.max_abs_yaw_deg);
    s.view_dims = sampling.view_dims;
    s.scale = sampling.scale;
    s.noise_sigma = sampling.noise_sigma;
    s.brightness_delta = rng.Uniform(-sampling.max_abs_brightness,
                                     sampling.max_abs_brightness);
    s.noise_seed = rng.Next();
    specs.push_back(s);
  }
  return specs;
}

EmittedDataset EmitDataset(const SynthWorld& world,
                           const std::vector<ViewSpec>& specs,
                           const std::filesystem::path& out_dir,
                           const ImageDims& tile_dims, double overlap) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::kIoError, out_dir.string());

  EmittedDataset out;
  std::vector<PhotoMeta> metas;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03zu.png", i);
    SampledView view = SampleView(world, specs[i], name);
    const auto path = out_dir / name;
    WritePng(view.photo, path);
    out.photos.push_back(path);
    metas.push_back(std::move(view.truth));
  }
  out.meta_csv = out_dir / "meta.csv";
  WritePhotoMeta(metas, out.meta_csv);
  out.catalog = SliceMosaic(world.raster, world.rect, tile_dims, overlap,
                            out_dir);
  return out;
}

}  // namespace wildloc
