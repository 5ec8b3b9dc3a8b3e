#include <random>

#include <benchmark/benchmark.h>

#include "wildloc/features.h"
#include "wildloc/homography.h"
#include "wildloc/raster.h"
#include "wildloc/synth.h"

namespace wildloc {
namespace {

const SynthWorld& World() {
  static const SynthWorld w = [] {
    const ImageDims dims{1024, 1024};
    return GenerateWorld(3, dims, RectAroundCenter(kDefaultWorldCenter, dims, 0.5),
                         0.5);
  }();
  return w;
}

void BM_Detect(benchmark::State& state) {
  const MatcherConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        DetectKeypoints(World().raster, nullptr, cfg.fast_threshold,
                        cfg.max_keypoints));
  }
}
BENCHMARK(BM_Detect)->Unit(benchmark::kMillisecond);

void BM_Describe(benchmark::State& state) {
  const MatcherConfig cfg;
  const auto kps = DetectKeypoints(World().raster, nullptr, cfg.fast_threshold,
                                   cfg.max_keypoints);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeDescriptors(World().raster, kps));
  }
  state.SetItemsProcessed(state.iterations() * kps.size());
}
BENCHMARK(BM_Describe)->Unit(benchmark::kMillisecond);

void BM_Match(benchmark::State& state) {
  const MatcherConfig cfg;
  const FeatureSet a = ExtractFeatures(World().raster, nullptr, cfg);
  const auto [rotated, mask] = RotateExpand(World().raster, 10.0);
  const FeatureSet b = ExtractFeatures(rotated, &mask, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        MatchDescriptors(a.descriptors, b.descriptors, cfg.ratio, cfg.cross_check));
  }
}
BENCHMARK(BM_Match)->Unit(benchmark::kMillisecond);

void BM_Ransac(benchmark::State& state) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> coord(0, 1000);
  std::normal_distribution<double> noise(0, 0.5);
  Eigen::Matrix3d m;
  m << 0.95, 0.1, 30, -0.08, 1.02, -12, 1e-4, -5e-5, 1;
  const Homography h(m);
  std::vector<MatchPair> pairs;
  for (int i = 0; i < state.range(0); ++i) {
    const PixelPoint a{coord(rng), coord(rng)};
    PixelPoint b = ApplyHomography(h, a);
    if (i % 10 < 3) {
      b = {coord(rng), coord(rng)};
    } else {
      b.x += noise(rng);
      b.y += noise(rng);
    }
    pairs.push_back({a, b});
  }
  RansacOptions opt;
  opt.threshold_px = 3.0;
  for (auto _ : state) benchmark::DoNotOptimize(RansacHomography(pairs, opt));
}
BENCHMARK(BM_Ransac)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Rotate(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(RotateExpand(World().raster, 27.0));
  }
}
BENCHMARK(BM_Rotate)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace wildloc

BENCHMARK_MAIN();
