#include "wildloc/features.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wildloc/error.h"
#include "wildloc/external_matcher.h"

namespace wildloc {
namespace {

constexpr std::array<std::array<int, 2>, 16> kCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};
constexpr int kMinArc = 12;

struct PatternPair {
  int x1, y1, x2, y2;
};
constexpr PatternPair kPattern[kDescriptorBits] = {
#include "brief_pattern.inc"
};
constexpr int kSmoothRadius = 2;

// Longest circular run of set bits in a 16-bit ring.
int LongestArc(std::uint32_t ring) {
  if (ring == 0xFFFFu) return 16;
  // Unroll the ring twice so that runs crossing index 0 are seen whole.
  const std::uint32_t doubled = ring | (ring << 16);
  int best = 0;
  int run = 0;
  for (int i = 0; i < 32; ++i) {
    if ((doubled >> i) & 1u) {
      best = std::max(best, ++run);
    } else {
      run = 0;
    }
  }
  return std::min(best, 16);
}

// Corner response: the larger of the summed excess brightness of the
// bright ring pixels and of the dark ring pixels. Zero when not a corner.
double SegmentTestScore(const GrayRaster& img, int x, int y, int threshold) {
  const int c = img.at(x, y);
  const int hi = c + threshold;
  const int lo = c - threshold;

  // Any 12-arc covers at least 3 of the 4 compass pixels.
  int compass_bright = 0;
  int compass_dark = 0;
  for (int k = 0; k < 16; k += 4) {
    const int p = img.at(x + kCircle[k][0], y + kCircle[k][1]);
    compass_bright += p >= hi;
    compass_dark += p <= lo;
  }
  if (compass_bright < 3 && compass_dark < 3) return 0.0;

  std::uint32_t bright = 0;
  std::uint32_t dark = 0;
  int bright_sum = 0;
  int dark_sum = 0;
  for (int k = 0; k < 16; ++k) {
    const int p = img.at(x + kCircle[k][0], y + kCircle[k][1]);
    if (p >= hi) {
      bright |= 1u << k;
      bright_sum += p - hi;
    } else if (p <= lo) {
      dark |= 1u << k;
      dark_sum += lo - p;
    }
  }
  double score = 0.0;
  if (LongestArc(bright) >= kMinArc) score = bright_sum + 1.0;
  if (LongestArc(dark) >= kMinArc) score = std::max(score, dark_sum + 1.0);
  return score;
}

// Summed-area table with a zero top row and left column.
template <typename T, typename F>
std::vector<T> SummedArea(int w, int h, F value) {
  std::vector<T> sat(static_cast<std::size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    T row = 0;
    for (int x = 0; x < w; ++x) {
      row += value(x, y);
      sat[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          sat[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return sat;
}

// Sum over the inclusive box [x0,x1]x[y0,y1].
template <typename T>
T BoxSum(const std::vector<T>& sat, int w, int x0, int y0, int x1, int y1) {
  const auto stride = static_cast<std::size_t>(w + 1);
  return sat[(y1 + 1) * stride + x1 + 1] - sat[y0 * stride + x1 + 1] -
         sat[(y1 + 1) * stride + x0] + sat[y0 * stride + x0];
}

}  // namespace

std::vector<Keypoint> DetectKeypoints(const GrayRaster& img,
                                      const ValidityMask* mask, int threshold,
                                      int max_count) {
  if (threshold < 1 || max_count < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "detector threshold and max_count must be >= 1");
  }
  const int w = img.width();
  const int h = img.height();
  if (mask != nullptr && (mask->width() != w || mask->height() != h)) {
    throw Error(ErrorKind::kInvalidArgument,
                "validity mask dimensions differ from the image");
  }
  const int r = kPatchRadius;
  if (w < 2 * r + 1 || h < 2 * r + 1) return {};

  std::vector<std::int32_t> invalid;
  if (mask != nullptr) {
    invalid = SummedArea<std::int32_t>(
        w, h, [&](int x, int y) { return mask->valid(x, y) ? 0 : 1; });
  }

  std::vector<double> scores(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      if (mask != nullptr && !mask->valid(x, y)) continue;
      scores[static_cast<std::size_t>(y) * w + x] =
          SegmentTestScore(img, x, y, threshold);
    }
  }

  std::vector<Keypoint> kps;
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      const double s = scores[static_cast<std::size_t>(y) * w + x];
      if (s <= 0.0) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n =
              scores[static_cast<std::size_t>(y + dy) * w + x + dx];
          // Plateaus keep their first pixel in raster order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (n > s || (n == s && earlier)) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      if (mask != nullptr &&
          BoxSum(invalid, w, x - r, y - r, x + r, y + r) != 0) {
        continue;
      }
      kps.push_back({{x + 0.5, y + 0.5}, s});
    }
  }

  // Raster order breaks score ties.
  std::stable_sort(kps.begin(), kps.end(),
                   [](const Keypoint& a, const Keypoint& b) {
                     return a.score > b.score;
                   });
  if (kps.size() > static_cast<std::size_t>(max_count)) kps.resize(max_count);
  return kps;
}

std::vector<Descriptor> ComputeDescriptors(const GrayRaster& img,
                                           std::span<const Keypoint> kps) {
  const int w = img.width();
  const int h = img.height();
  const int r = kPatchRadius;
  for (const Keypoint& kp : kps) {
    const int x = static_cast<int>(std::floor(kp.pos.x));
    const int y = static_cast<int>(std::floor(kp.pos.y));
    if (x - r < 0 || y - r < 0 || x + r >= w || y + r >= h) {
      throw Error(ErrorKind::kOutOfBounds,
                  "descriptor patch at (" + std::to_string(kp.pos.x) + ", " +
                      std::to_string(kp.pos.y) + ") exceeds the " +
                      std::to_string(w) + "x" + std::to_string(h) + " image");
    }
  }
  if (kps.empty()) return {};

  const auto sat = SummedArea<std::int32_t>(
      w, h, [&](int x, int y) { return std::int32_t{img.at(x, y)}; });
  const int sr = kSmoothRadius;

  std::vector<Descriptor> out(kps.size());
  for (std::size_t k = 0; k < kps.size(); ++k) {
    const int x = static_cast<int>(std::floor(kps[k].pos.x));
    const int y = static_cast<int>(std::floor(kps[k].pos.y));
    Descriptor& d = out[k];
    for (int i = 0; i < kDescriptorBits; ++i) {
      const PatternPair& p = kPattern[i];
      // 5x5 box sums; comparing sums is equivalent to comparing means.
      const std::int32_t s1 = BoxSum(sat, w, x + p.x1 - sr, y + p.y1 - sr,
                                     x + p.x1 + sr, y + p.y1 + sr);
      const std::int32_t s2 = BoxSum(sat, w, x + p.x2 - sr, y + p.y2 - sr,
                                     x + p.x2 + sr, y + p.y2 + sr);
      if (s1 < s2) d.set_bit(i);
    }
  }
  return out;
}

std::vector<DescriptorMatch> MatchDescriptors(std::span<const Descriptor> da,
                                              std::span<const Descriptor> db,
                                              double ratio, bool cross_check) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "ratio must lie in (0, 1]");
  }
  if (da.empty() || db.empty()) return {};

  constexpr int kNone = std::numeric_limits<int>::max();
  struct Nearest {
    int best = kNone;
    int second = kNone;
    int index = -1;

    // Ascending candidate order keeps the lowest index on ties.
    void Offer(int d, int i) {
      if (d < best) {
        second = best;
        best = d;
        index = i;
      } else if (d < second) {
        second = d;
      }
    }
    bool PassesRatio(double ratio) const {
      return second == kNone || best < ratio * second;
    }
  };

  std::vector<Nearest> rows(da.size());
  std::vector<Nearest> cols(cross_check ? db.size() : 0);
  for (std::size_t i = 0; i < da.size(); ++i) {
    for (std::size_t j = 0; j < db.size(); ++j) {
      const int d = HammingDistance(da[i], db[j]);
      rows[i].Offer(d, static_cast<int>(j));
      if (cross_check) cols[j].Offer(d, static_cast<int>(i));
    }
  }

  std::vector<DescriptorMatch> matches;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const Nearest& row = rows[i];
    if (!row.PassesRatio(ratio)) continue;
    if (cross_check) {
      const Nearest& col = cols[row.index];
      if (col.index != static_cast<int>(i) || !col.PassesRatio(ratio)) continue;
    }
    matches.push_back({static_cast<int>(i), row.index, row.best,
                       1.0 - static_cast<double>(row.best) / kDescriptorBits});
  }
  return matches;
}

FeatureSet ExtractFeatures(const GrayRaster& img, const ValidityMask* mask,
                           const MatcherConfig& cfg) {
  FeatureSet fs;
  fs.keypoints =
      DetectKeypoints(img, mask, cfg.fast_threshold, cfg.max_keypoints);
  fs.descriptors = ComputeDescriptors(img, fs.keypoints);
  return fs;
}

std::vector<MatchPair> MatchFeatureSets(const FeatureSet& a,
                                        const FeatureSet& b,
                                        const MatcherConfig& cfg) {
  const auto index_matches =
      MatchDescriptors(a.descriptors, b.descriptors, cfg.ratio,
                       cfg.cross_check);
  std::vector<MatchPair> pairs;
  pairs.reserve(index_matches.size());
  for (const DescriptorMatch& m : index_matches) {
    pairs.push_back({a.keypoints[m.a_index].pos, b.keypoints[m.b_index].pos,
                     m.confidence});
  }
  return pairs;
}

std::vector<MatchPair> MatchImages(const MatchImage& a, const MatchImage& b,
                                   const MatcherConfig& cfg) {
  if (a.raster == nullptr || b.raster == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "match input without raster");
  }
  if (cfg.kind == MatcherKind::kExternal) {
    ExternalMatcher matcher(cfg.external_command);
    return matcher.Match(a, b);
  }
  return MatchFeatureSets(ExtractFeatures(*a.raster, a.mask, cfg),
                          ExtractFeatures(*b.raster, b.mask, cfg), cfg);
}

}  // namespace wildloc
