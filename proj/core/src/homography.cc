#include "wildloc/homography.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "wildloc/error.h"

namespace wildloc {
namespace {

constexpr double kDegenerateConditioning = 1e-10;
constexpr double kCollinearArea = 1e-9;
constexpr double kInfinityEps = 1e-12;

// Similarity that moves the centroid to the origin and scales the mean
// distance from it to sqrt(2).
Eigen::Matrix3d ConditioningTransform(std::span<const Eigen::Vector2d> pts) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 1e-12) || !std::isfinite(mean_dist)) {
    throw Error(ErrorKind::kDegenerateConfiguration,
                "coincident or non-finite points");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(), 0, s, -s * centroid.y(), 0, 0, 1;
  return t;
}

double TriangleArea2(const PixelPoint& a, const PixelPoint& b,
                     const PixelPoint& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

bool HasCollinearTriple(const std::array<const MatchPair*, 4>& s) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (0.5 * std::abs(TriangleArea2(s[i]->a, s[j]->a, s[k]->a)) <
            kCollinearArea) {
          return true;
        }
      }
    }
  }
  return false;
}

// Unbiased draw from [0, n) using only the raw generator output, so the
// sequence is identical on every standard library.
std::size_t UniformIndex(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t reject_below = (0 - bound) % bound;
  std::uint64_t x = rng();
  while (x < reject_below) x = rng();
  return static_cast<std::size_t>(x % bound);
}

std::vector<int> Inliers(const Homography& h, std::span<const MatchPair> pairs,
                         const RansacOptions& options) {
  std::vector<int> inliers;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double e;
    try {
      e = ReprojectionError(h, pairs[i], options.mode);
    } catch (const Error&) {
      continue;
    }
    if (e < options.threshold_px) inliers.push_back(static_cast<int>(i));
  }
  return inliers;
}

double RmsOver(const Homography& h, std::span<const MatchPair> pairs,
               const std::vector<int>& indices, ReprojectionMode mode) {
  if (indices.empty()) return 0.0;
  double sum = 0.0;
  for (int i : indices) {
    double e;
    try {
      e = ReprojectionError(h, pairs[i], mode);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(indices.size()));
}

std::vector<MatchPair> Gather(std::span<const MatchPair> pairs,
                              const std::vector<int>& indices) {
  std::vector<MatchPair> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(pairs[i]);
  return out;
}

}  // namespace

Homography::Homography(const Eigen::Matrix3d& m) : m_(m) {
  if (!m_.allFinite()) {
    throw Error(ErrorKind::kDegenerateConfiguration, "non-finite homography");
  }
  if (std::abs(m_(2, 2)) > kInfinityEps) {
    m_ /= m_(2, 2);
  } else {
    const double n = m_.norm();
    if (n == 0.0) {
      throw Error(ErrorKind::kDegenerateConfiguration, "zero homography");
    }
    m_ /= n;
  }
}

Homography Homography::Translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return Homography(m);
}

Homography Homography::Inverse() const {
  const double det = m_.determinant();
  if (std::abs(det) < 1e-300) {
    throw Error(ErrorKind::kDegenerateConfiguration, "singular homography");
  }
  return Homography(m_.inverse());
}

PixelPoint ApplyHomography(const Homography& h, const PixelPoint& p) {
  const Eigen::Vector3d q = h.matrix() * Eigen::Vector3d(p.x, p.y, 1.0);
  if (std::abs(q.z()) < kInfinityEps) {
    throw Error(ErrorKind::kPointAtInfinity,
                "(" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                    ") maps to infinity");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

std::array<PixelPoint, 4> TransformQuad(const Homography& h,
                                        const ImageDims& dims) {
  const double w = dims.width;
  const double hh = dims.height;
  return {ApplyHomography(h, {0.0, 0.0}), ApplyHomography(h, {w, 0.0}),
          ApplyHomography(h, {w, hh}), ApplyHomography(h, {0.0, hh})};
}

Homography EstimateDlt(std::span<const MatchPair> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorKind::kInsufficientPairs,
                std::to_string(n) + " pairs, at least 4 required");
  }
  std::vector<Eigen::Vector2d> src(n);
  std::vector<Eigen::Vector2d> dst(n);
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = {pairs[i].a.x, pairs[i].a.y};
    dst[i] = {pairs[i].b.x, pairs[i].b.y};
  }
  const Eigen::Matrix3d ts = ConditioningTransform(src);
  const Eigen::Matrix3d td = ConditioningTransform(dst);

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * src[i].homogeneous();
    const Eigen::Vector3d q = td * dst[i].homogeneous();
    const double x = p.x(), y = p.y(), u = q.x(), v = q.y();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  // A unique solution needs a one-dimensional null space, i.e. the second
  // smallest of the nine singular values bounded away from zero.
  if (sv.size() < 8 || !(sv(7) > kDegenerateConditioning * sv(0))) {
    throw Error(ErrorKind::kDegenerateConfiguration,
                "correspondences do not determine a unique homography");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  if (std::abs(hn.determinant()) <
      kDegenerateConditioning * std::pow(hn.norm(), 3)) {
    throw Error(ErrorKind::kDegenerateConfiguration,
                "estimated homography is singular");
  }
  return Homography(td.inverse() * hn * ts);
}

double ReprojectionError(const Homography& h, const MatchPair& pair,
                         ReprojectionMode mode) {
  const PixelPoint fb = ApplyHomography(h, pair.a);
  const double fwd = std::hypot(fb.x - pair.b.x, fb.y - pair.b.y);
  if (mode == ReprojectionMode::kForward) return fwd;
  const PixelPoint ba = ApplyHomography(h.Inverse(), pair.b);
  const double bwd = std::hypot(ba.x - pair.a.x, ba.y - pair.a.y);
  return std::sqrt(0.5 * (fwd * fwd + bwd * bwd));
}

RansacResult RansacHomography(std::span<const MatchPair> pairs,
                              const RansacOptions& options) {
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorKind::kInsufficientPairs,
                std::to_string(n) + " pairs, at least 4 required");
  }
  if (!(options.threshold_px > 0.0) || !(options.confidence > 0.0) ||
      !(options.confidence < 1.0) || options.max_iters < 1) {
    throw Error(ErrorKind::kInvalidArgument,
                "RANSAC needs threshold > 0, 0 < confidence < 1, max_iters >= 1");
  }

  std::mt19937_64 rng(options.seed);
  std::vector<int> best_inliers;
  Homography best_model;
  Homography best_sample;
  bool found = false;
  long long required = options.max_iters;
  int iter = 0;

  while (iter < required && iter < options.max_iters) {
    ++iter;
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = UniformIndex(rng, n);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) ==
                idx.begin() + k;
      } while (!fresh);
    }
    const std::array<const MatchPair*, 4> sample = {
        &pairs[idx[0]], &pairs[idx[1]], &pairs[idx[2]], &pairs[idx[3]]};
    if (HasCollinearTriple(sample)) continue;

    Homography model;
    try {
      const std::array<MatchPair, 4> minimal = {*sample[0], *sample[1],
                                                *sample[2], *sample[3]};
      model = EstimateDlt(minimal);
    } catch (const Error&) {
      continue;
    }
    std::vector<int> inliers = Inliers(model, pairs, options);
    if (inliers.size() <= best_inliers.size()) continue;

    found = true;
    best_sample = model;
    // Grow the consensus set by refitting on it until it stops growing.
    Homography grown = model;
    for (int round = 0; round < 10; ++round) {
      Homography refit;
      try {
        refit = EstimateDlt(Gather(pairs, inliers));
      } catch (const Error&) {
        break;
      }
      std::vector<int> refit_inliers = Inliers(refit, pairs, options);
      if (refit_inliers.size() <= inliers.size()) break;
      grown = refit;
      inliers = std::move(refit_inliers);
    }
    best_model = grown;
    best_inliers = std::move(inliers);

    const double w = static_cast<double>(best_inliers.size()) / n;
    const double all_good = std::pow(w, 4);
    if (all_good >= 1.0) {
      required = 0;
    } else {
      const double need =
          std::log(1.0 - options.confidence) / std::log1p(-all_good);
      required = std::isfinite(need)
                     ? static_cast<long long>(std::ceil(need))
                     : static_cast<long long>(options.max_iters);
    }
  }

  if (!found || best_inliers.size() < 4) {
    throw Error(ErrorKind::kNoModelFound,
                "no sample reached 4 inliers after " + std::to_string(iter) +
                    " iterations");
  }

  RansacResult result;
  result.report.inlier_indices = best_inliers;
  result.report.iterations_run = iter;
  result.report.sample_rms =
      RmsOver(best_sample, pairs, best_inliers, options.mode);

  // Final refit on the whole consensus set; keep whichever candidate has
  // the lowest error over it.
  Homography chosen = best_model;
  double chosen_rms = RmsOver(best_model, pairs, best_inliers, options.mode);
  try {
    const Homography refit = EstimateDlt(Gather(pairs, best_inliers));
    const double refit_rms = RmsOver(refit, pairs, best_inliers, options.mode);
    if (refit_rms <= chosen_rms) {
      chosen = refit;
      chosen_rms = refit_rms;
    }
  } catch (const Error&) {
  }
  if (result.report.sample_rms < chosen_rms) {
    chosen = best_sample;
    chosen_rms = result.report.sample_rms;
  }
  result.homography = chosen;
  result.report.reprojection_rms = chosen_rms;
  return result;
}

}  // namespace wildloc
