#include "wildloc/features.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"
#include "wildloc/error.h"
#include "wildloc/synth.h"

namespace wildloc {
namespace {

// Radius-3 Bresenham circle, clockwise from 12 o'clock.
constexpr std::array<std::array<int, 2>, 16> kCircle{{{0, -3},
                                                      {1, -3},
                                                      {2, -2},
                                                      {3, -1},
                                                      {3, 0},
                                                      {3, 1},
                                                      {2, 2},
                                                      {1, 3},
                                                      {0, 3},
                                                      {-1, 3},
                                                      {-2, 2},
                                                      {-3, 1},
                                                      {-3, 0},
                                                      {-3, -1},
                                                      {-2, -2},
                                                      {-1, -3}}};

// Brute-force segment test, written independently of the detector.
bool SegmentTest(const GrayRaster& img, int x, int y, int t) {
  if (x < 3 || y < 3 || x >= img.width() - 3 || y >= img.height() - 3) {
    return false;
  }
  const int c = img.at(x, y);
  for (int sign : {1, -1}) {
    for (int start = 0; start < 16; ++start) {
      bool ok = true;
      for (int k = 0; k < 12 && ok; ++k) {
        const auto& o = kCircle[(start + k) % 16];
        const int v = img.at(x + o[0], y + o[1]);
        ok = sign > 0 ? v >= c + t : v <= c - t;
      }
      if (ok) return true;
    }
  }
  return false;
}

std::vector<std::pair<int, int>> OracleCorners(const GrayRaster& img, int t) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (SegmentTest(img, x, y, t)) out.emplace_back(x, y);
    }
  }
  return out;
}

bool PatchInside(const PixelPoint& p, int w, int h) {
  const int x = static_cast<int>(std::floor(p.x));
  const int y = static_cast<int>(std::floor(p.y));
  return x - kPatchRadius >= 0 && y - kPatchRadius >= 0 &&
         x + kPatchRadius < w && y + kPatchRadius < h;
}

GrayRaster Textured(int x0, int y0, int w, int h) {
  static const SynthWorld world = testing::SmallWorld(3);
  return testing::Crop(world.raster, x0, y0, w, h);
}

Descriptor WithBits(int n, int offset = 0) {
  Descriptor d;
  for (int i = 0; i < n; ++i) d.set_bit((offset + i) % kDescriptorBits);
  return d;
}

TEST(Detect, UniformImageIsEmpty) {
  EXPECT_TRUE(DetectKeypoints(GrayRaster(80, 80, 128), nullptr, 20, 2000)
                  .empty());
}

TEST(Detect, RightAngleCornersBelowArcLength) {
  // A 90 degree corner leaves at most 11 contiguous contrasting circle
  // pixels, one short of the 12-pixel arc, so a filled square produces no
  // segment-test response at its corners.
  GrayRaster img(64, 64, 0);
  for (int y = 30; y < 35; ++y) {
    for (int x = 30; x < 35; ++x) img.at(x, y) = 255;
  }
  EXPECT_TRUE(OracleCorners(img, 20).empty());
  EXPECT_TRUE(DetectKeypoints(img, nullptr, 20, 2000).empty());
}

TEST(Detect, AcuteApexAndSmallBlob) {
  GrayRaster img(96, 96, 0);
  // Narrow wedge opening downward from (40, 30).
  for (int y = 30; y < 70; ++y) {
    for (int x = 0; x < 96; ++x) {
      if (std::abs(x + 0.5 - 40.5) <= 0.25 * (y - 30) + 0.5) img.at(x, y) = 255;
    }
  }
  // 3x3 bright blob.
  for (int y = 59; y < 62; ++y) {
    for (int x = 69; x < 72; ++x) img.at(x, y) = 255;
  }
  const auto kps = DetectKeypoints(img, nullptr, 20, 2000);
  auto near = [&](double x, double y) {
    return std::any_of(kps.begin(), kps.end(), [&](const Keypoint& k) {
      return std::hypot(k.pos.x - x, k.pos.y - y) <= 2.0;
    });
  };
  EXPECT_TRUE(near(40.5, 30.5));
  EXPECT_TRUE(near(70.5, 60.5));
}

TEST(Detect, AgreesWithBruteForceSegmentTest) {
  const GrayRaster img = Textured(100, 100, 200, 160);
  const auto oracle = OracleCorners(img, 20);
  const std::set<std::pair<int, int>> all(oracle.begin(), oracle.end());
  const auto kps = DetectKeypoints(img, nullptr, 20, 100000);
  ASSERT_FALSE(kps.empty());
  std::set<std::pair<int, int>> found;
  for (const Keypoint& k : kps) {
    const int x = static_cast<int>(std::floor(k.pos.x));
    const int y = static_cast<int>(std::floor(k.pos.y));
    EXPECT_EQ(k.pos.x, x + 0.5);
    EXPECT_EQ(k.pos.y, y + 0.5);
    EXPECT_TRUE(all.count({x, y})) << x << "," << y;
    EXPECT_TRUE(PatchInside(k.pos, img.width(), img.height()));
    found.insert({x, y});
  }
  // Isolated oracle corners (no other corner in their 3x3) always survive
  // suppression.
  int isolated = 0;
  for (auto [x, y] : oracle) {
    if (!PatchInside({x + 0.5, y + 0.5}, img.width(), img.height())) continue;
    bool alone = true;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if ((dx || dy) && all.count({x + dx, y + dy})) alone = false;
      }
    }
    if (!alone) continue;
    ++isolated;
    EXPECT_TRUE(found.count({x, y})) << x << "," << y;
  }
  EXPECT_GT(isolated, 10);
  // Suppression: no two keypoints are 8-neighbours.
  for (auto [x, y] : found) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx || dy) EXPECT_FALSE(found.count({x + dx, y + dy}));
      }
    }
  }
  for (std::size_t i = 1; i < kps.size(); ++i) {
    EXPECT_GE(kps[i - 1].score, kps[i].score);
  }
}

TEST(Detect, MaxCountOneIsGlobalMaximum) {
  const GrayRaster img = Textured(0, 0, 300, 300);
  const auto all = DetectKeypoints(img, nullptr, 20, 100000);
  const auto one = DetectKeypoints(img, nullptr, 20, 1);
  ASSERT_EQ(one.size(), 1u);
  ASSERT_FALSE(all.empty());
  EXPECT_EQ(one[0].pos, all[0].pos);
  for (const Keypoint& k : all) EXPECT_LE(k.score, one[0].score);
  const auto ten = DetectKeypoints(img, nullptr, 20, 10);
  ASSERT_EQ(ten.size(), 10u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(ten[i].pos, all[i].pos);
}

TEST(Detect, RejectsBadArguments) {
  const GrayRaster img(40, 40, 0);
  for (auto [t, n] : {std::pair{0, 10}, {20, 0}}) {
    try {
      DetectKeypoints(img, nullptr, t, n);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
    }
  }
}

TEST(Describe, Deterministic) {
  const GrayRaster img = Textured(50, 60, 200, 200);
  const auto kps = DetectKeypoints(img, nullptr, 20, 300);
  ASSERT_FALSE(kps.empty());
  EXPECT_EQ(ComputeDescriptors(img, kps), ComputeDescriptors(img, kps));
}

TEST(Describe, BorderContract) {
  const GrayRaster img(100, 100, 50);
  const Keypoint kp{{5, 5}, 1.0};
  try {
    ComputeDescriptors(img, std::span(&kp, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfBounds);
  }
  const Keypoint ok{{50.5, 50.5}, 1.0};
  EXPECT_EQ(ComputeDescriptors(img, std::span(&ok, 1)).size(), 1u);
}

TEST(Describe, UniformPatchIsAllZero) {
  const GrayRaster img(64, 64, 77);
  const Keypoint kp{{32.5, 32.5}, 1.0};
  const auto d = ComputeDescriptors(img, std::span(&kp, 1));
  ASSERT_EQ(d.size(), 1u);
  for (int i = 0; i < kDescriptorBits; ++i) EXPECT_FALSE(d[0].bit(i));
}

TEST(Describe, BitsRespondToContent) {
  const GrayRaster img = Textured(10, 10, 120, 120);
  const auto kps = DetectKeypoints(img, nullptr, 20, 50);
  const auto ds = ComputeDescriptors(img, kps);
  int ones = 0;
  for (const auto& d : ds) {
    for (int i = 0; i < kDescriptorBits; ++i) ones += d.bit(i);
  }
  const double frac = ones / static_cast<double>(ds.size() * kDescriptorBits);
  EXPECT_GT(frac, 0.25);
  EXPECT_LT(frac, 0.75);
}

TEST(MatchDescriptors, SelfMatchIsIdentity) {
  std::mt19937_64 rng(8);
  std::vector<Descriptor> ds(40);
  for (auto& d : ds) {
    for (auto& w : d.words) w = rng();
  }
  const auto m = MatchDescriptors(ds, ds, 0.8, true);
  ASSERT_EQ(m.size(), ds.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i].a_index, static_cast<int>(i));
    EXPECT_EQ(m[i].b_index, static_cast<int>(i));
    EXPECT_EQ(m[i].confidence, 1.0);
  }
}

TEST(MatchDescriptors, RatioTestPasses) {
  const std::vector<Descriptor> da{Descriptor{}};
  const std::vector<Descriptor> db{WithBits(100, 0), WithBits(10, 200)};
  ASSERT_EQ(HammingDistance(da[0], db[0]), 100);
  ASSERT_EQ(HammingDistance(da[0], db[1]), 10);
  for (bool cross : {false, true}) {
    const auto m = MatchDescriptors(da, db, 0.8, cross);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].b_index, 1);
    EXPECT_EQ(m[0].distance, 10);
    EXPECT_DOUBLE_EQ(m[0].confidence, 1.0 - 10.0 / 256.0);
  }
}

TEST(MatchDescriptors, RatioTestRejects) {
  const std::vector<Descriptor> da{Descriptor{}};
  const std::vector<Descriptor> db{WithBits(10, 0), WithBits(11, 100)};
  for (bool cross : {false, true}) {
    EXPECT_TRUE(MatchDescriptors(da, db, 0.8, cross).empty());
  }
}

TEST(MatchDescriptors, TiesGoToLowestIndex) {
  const std::vector<Descriptor> da{Descriptor{}};
  const std::vector<Descriptor> db{WithBits(50, 0), WithBits(5, 10),
                                   WithBits(5, 100)};
  // d1 = d2 = 5 fails the ratio test at any ratio <= 1 ...
  EXPECT_TRUE(MatchDescriptors(da, db, 1.0, false).empty());
  // ... but the winner is still the lowest index when the gate is open.
  const std::vector<Descriptor> db2{WithBits(5, 10), WithBits(5, 100)};
  const std::vector<Descriptor> solo{WithBits(5, 10)};
  const auto m = MatchDescriptors(solo, db2, 0.8, false);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].b_index, 0);
}

TEST(MatchDescriptors, EmptyInputs) {
  const std::vector<Descriptor> none, one{Descriptor{}};
  EXPECT_TRUE(MatchDescriptors(none, one, 0.8, true).empty());
  EXPECT_TRUE(MatchDescriptors(one, none, 0.8, true).empty());
}

TEST(MatchImages, IdenticalImages) {
  const GrayRaster img = Textured(200, 150, 320, 240);
  const auto pairs =
      MatchImages({&img, nullptr, {}}, {&img, nullptr, {}}, MatcherConfig{});
  ASSERT_GT(pairs.size(), 20u);
  for (const MatchPair& p : pairs) {
    EXPECT_LT(std::hypot(p.a.x - p.b.x, p.a.y - p.b.y), 1.0);
  }
}

TEST(MatchImages, Translation) {
  const GrayRaster a = Textured(100, 100, 400, 300);
  const GrayRaster b = Textured(90, 100, 400, 300);
  const auto pairs =
      MatchImages({&a, nullptr, {}}, {&b, nullptr, {}}, MatcherConfig{});
  ASSERT_GT(pairs.size(), 20u);
  std::size_t good = 0;
  for (const MatchPair& p : pairs) {
    if (std::abs(p.b.x - p.a.x - 10.0) <= 1.0 &&
        std::abs(p.b.y - p.a.y) <= 1.0) {
      ++good;
    }
  }
  EXPECT_GE(2 * good, pairs.size());
}

TEST(MatchImages, UniformHasNoMatches) {
  const GrayRaster flat(300, 300, 90);
  const GrayRaster tex = Textured(0, 0, 300, 300);
  EXPECT_TRUE(
      MatchImages({&flat, nullptr, {}}, {&tex, nullptr, {}}, MatcherConfig{})
          .empty());
  EXPECT_TRUE(
      MatchImages({&tex, nullptr, {}}, {&flat, nullptr, {}}, MatcherConfig{})
          .empty());
}

// ---- properties ----

TEST(FeatureProperties, Determinism) {
  const GrayRaster a = Textured(100, 100, 300, 300);
  const GrayRaster b = Textured(110, 95, 300, 300);
  const MatcherConfig cfg;
  const FeatureSet fa1 = ExtractFeatures(a, nullptr, cfg);
  const FeatureSet fa2 = ExtractFeatures(a, nullptr, cfg);
  ASSERT_EQ(fa1.keypoints.size(), fa2.keypoints.size());
  for (std::size_t i = 0; i < fa1.keypoints.size(); ++i) {
    EXPECT_EQ(fa1.keypoints[i].pos, fa2.keypoints[i].pos);
    EXPECT_EQ(fa1.keypoints[i].score, fa2.keypoints[i].score);
  }
  EXPECT_EQ(fa1.descriptors, fa2.descriptors);
  const auto m1 = MatchImages({&a, nullptr, {}}, {&b, nullptr, {}}, cfg);
  const auto m2 = MatchImages({&a, nullptr, {}}, {&b, nullptr, {}}, cfg);
  ASSERT_EQ(m1.size(), m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    EXPECT_EQ(m1[i].a, m2[i].a);
    EXPECT_EQ(m1[i].b, m2[i].b);
    EXPECT_EQ(m1[i].confidence, m2[i].confidence);
  }
}

TEST(FeatureProperties, MaskSoundness) {
  const GrayRaster img = Textured(0, 0, 400, 400);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    ValidityMask mask(400, 400, true);
    for (int holes = 0; holes < 6; ++holes) {
      const int x0 = rng() % 380, y0 = rng() % 380;
      const int w = 1 + rng() % 60, h = 1 + rng() % 60;
      for (int y = y0; y < std::min(400, y0 + h); ++y) {
        for (int x = x0; x < std::min(400, x0 + w); ++x) mask.set(x, y, false);
      }
    }
    const auto kps = DetectKeypoints(img, &mask, 20, 2000);
    ASSERT_FALSE(kps.empty());
    for (const Keypoint& k : kps) {
      const int cx = static_cast<int>(std::floor(k.pos.x));
      const int cy = static_cast<int>(std::floor(k.pos.y));
      for (int y = cy - kPatchRadius; y <= cy + kPatchRadius; ++y) {
        for (int x = cx - kPatchRadius; x <= cx + kPatchRadius; ++x) {
          ASSERT_TRUE(mask.valid(x, y));
        }
      }
    }
  }
}

TEST(FeatureProperties, CrossCheckSymmetry) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Descriptor> da(20 + rng() % 40), db(20 + rng() % 40);
    for (auto& d : da) {
      for (auto& w : d.words) w = rng();
    }
    for (auto& d : db) {
      for (auto& w : d.words) w = rng();
    }
    // Plant perturbed copies so that real matches exist.
    for (std::size_t i = 0; i < std::min(da.size(), db.size()) / 2; ++i) {
      db[(i * 7) % db.size()] = da[i];
      for (int f = 0, n = rng() % 40; f < n; ++f) {
        db[(i * 7) % db.size()].words[rng() % 4] ^= std::uint64_t{1}
                                                    << (rng() % 64);
      }
    }
    for (double ratio : {0.6, 0.8, 1.0}) {
      std::set<std::pair<int, int>> ab, ba;
      for (const auto& m : MatchDescriptors(da, db, ratio, true)) {
        ab.insert({m.a_index, m.b_index});
      }
      for (const auto& m : MatchDescriptors(db, da, ratio, true)) {
        ba.insert({m.b_index, m.a_index});
      }
      EXPECT_EQ(ab, ba) << "trial " << trial << " ratio " << ratio;
    }
  }
}

TEST(FeatureProperties, NotRotationInvariant) {
  static const SynthWorld world = GenerateDefaultWorld(1);
  const GrayRaster img = testing::Crop(world.raster, 700, 700, 480, 480);
  const auto [rot, mask] = RotateExpand(img, 30.0);
  const MatcherConfig cfg;
  const auto self = MatchImages({&img, nullptr, {}}, {&img, nullptr, {}}, cfg);
  const auto rotated =
      MatchImages({&rot, &mask, {}}, {&img, nullptr, {}}, cfg);
  EXPECT_LT(rotated.size(), self.size());
}

}  // namespace
}  // namespace wildloc
