#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wildloc/features.h"
#include "wildloc/geo.h"

namespace wildloc {

// Projective map from drone-image pixels to tile pixels, defined up to
// scale. Stored with m(2,2) = 1 when |m(2,2)| > 1e-12, otherwise with unit
// Frobenius norm.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography Translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const { return m_; }
  Homography Inverse() const;

 private:
  Eigen::Matrix3d m_;
};

// Throws kPointAtInfinity when the homogeneous scale vanishes.
PixelPoint ApplyHomography(const Homography& h, const PixelPoint& p);

// Images of (0,0), (W,0), (W,H), (0,H) in that order.
std::array<PixelPoint, 4> TransformQuad(const Homography& h,
                                        const ImageDims& dims);

// Normalized direct linear transform over all pairs (Hartley conditioning
// on both point sets, smallest right singular vector of the 2N x 9 system).
// Throws kInsufficientPairs for fewer than 4 pairs and
// kDegenerateConfiguration for collinear or coincident configurations.
Homography EstimateDlt(std::span<const MatchPair> pairs);

enum class ReprojectionMode {
  kForward,    // |H a - b|
  kSymmetric,  // RMS of |H a - b| and |H^-1 b - a|
};

double ReprojectionError(const Homography& h, const MatchPair& pair,
                         ReprojectionMode mode = ReprojectionMode::kForward);

struct RansacOptions {
  double threshold_px = 5.0;
  int max_iters = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 0;
  ReprojectionMode mode = ReprojectionMode::kForward;
};

struct RansacReport {
  std::vector<int> inlier_indices;
  int iterations_run = 0;
  // RMS reprojection error of the returned model over the inliers.
  double reprojection_rms = 0.0;
  // RMS of the winning minimal-sample model over the same inliers.
  double sample_rms = 0.0;
};

struct RansacResult {
  Homography homography;
  RansacReport report;
};

// Seeded RANSAC over 4-point samples with adaptive termination
// N = log(1 - confidence) / log(1 - w^4), capped at max_iters. Samples with
// three collinear source points are skipped. The consensus set is grown by
// refitting, and the final model is a DLT refit on the full inlier set.
// Throws kInsufficientPairs or kNoModelFound.
RansacResult RansacHomography(std::span<const MatchPair> pairs,
                              const RansacOptions& options);

}  // namespace wildloc
