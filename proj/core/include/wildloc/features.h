#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "wildloc/geo.h"
#include "wildloc/raster.h"

namespace wildloc {

// A segment-test corner. `pos` is the continuous coordinate of the pixel
// center, i.e. pixel index + 0.5.
struct Keypoint {
  PixelPoint pos;
  double score = 0.0;
};

// 256-bit binary intensity-comparison signature.
struct Descriptor {
  std::array<std::uint64_t, 4> words{};

  bool bit(int i) const { return (words[i >> 6] >> (i & 63)) & 1u; }
  void set_bit(int i) { words[i >> 6] |= std::uint64_t{1} << (i & 63); }

  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

inline int HammingDistance(const Descriptor& a, const Descriptor& b) {
  return std::popcount(a.words[0] ^ b.words[0]) +
         std::popcount(a.words[1] ^ b.words[1]) +
         std::popcount(a.words[2] ^ b.words[2]) +
         std::popcount(a.words[3] ^ b.words[3]);
}

inline constexpr int kDescriptorBits = 256;
// Half-size of the square descriptor patch (31 x 31).
inline constexpr int kPatchRadius = 15;

// A correspondence between a point in image A (the drone photo) and a point
// in image B (the map tile).
struct MatchPair {
  PixelPoint a;
  PixelPoint b;
  double confidence = 1.0;
};

// Result of descriptor matching, by index into the two descriptor lists.
struct DescriptorMatch {
  int a_index = 0;
  int b_index = 0;
  int distance = 0;
  double confidence = 1.0;
};

enum class MatcherKind { kBuiltin, kExternal };

struct MatcherConfig {
  MatcherKind kind = MatcherKind::kBuiltin;
  int fast_threshold = 20;
  int max_keypoints = 2000;
  double ratio = 0.8;
  bool cross_check = true;
  // Shell command launching a match-exchange bridge (external kind only).
  std::string external_command;
};

// FAST-style segment test on the 16-pixel radius-3 circle: a contiguous arc
// of at least 12 pixels all brighter, or all darker, than the center by at
// least `threshold`. Non-maximum suppression over 3x3 neighborhoods, then
// the strongest `max_count` are returned in descending score order.
// Keypoints whose 31x31 patch leaves the image or touches an invalid mask
// pixel are discarded.
std::vector<Keypoint> DetectKeypoints(const GrayRaster& img,
                                      const ValidityMask* mask, int threshold,
                                      int max_count);

// Throws kOutOfBounds when a keypoint's patch does not fit in the image.
std::vector<Descriptor> ComputeDescriptors(const GrayRaster& img,
                                           std::span<const Keypoint> kps);

// Brute-force Hamming matching with Lowe's ratio test (d1 < ratio * d2) and
// optional mutual-nearest-neighbour check. Under cross-checking the ratio
// test is applied in both directions so that the result is symmetric.
std::vector<DescriptorMatch> MatchDescriptors(std::span<const Descriptor> da,
                                              std::span<const Descriptor> db,
                                              double ratio, bool cross_check);

struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<Descriptor> descriptors;
};

FeatureSet ExtractFeatures(const GrayRaster& img, const ValidityMask* mask,
                           const MatcherConfig& cfg);

std::vector<MatchPair> MatchFeatureSets(const FeatureSet& a,
                                        const FeatureSet& b,
                                        const MatcherConfig& cfg);

// An image handed to a matcher. `source` names a file holding exactly this
// raster; when empty the external matcher writes a temporary copy.
struct MatchImage {
  const GrayRaster* raster = nullptr;
  const ValidityMask* mask = nullptr;
  std::filesystem::path source;
};

// Detect, describe and match with the builtin pipeline, or delegate to an
// external bridge process according to `cfg.kind`.
std::vector<MatchPair> MatchImages(const MatchImage& a, const MatchImage& b,
                                   const MatcherConfig& cfg);

}  // namespace wildloc
