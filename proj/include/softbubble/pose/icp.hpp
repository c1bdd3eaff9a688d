#pragma once

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include "softbubble/error.hpp"
#include "softbubble/geometry/point_cloud.hpp"
#include "softbubble/geometry/transform.hpp"
#include "softbubble/pose/kdtree.hpp"

namespace softbubble::pose {

using geometry::Mat3;
using geometry::PointCloud;
using geometry::RigidTransform;

struct IcpParams {
  int max_iterations = 60;
  double max_correspondence_distance = 15.0;  // mm
  double rotation_tolerance = 1e-4;           // rad, per-iteration update
  double translation_tolerance = 1e-3;        // mm, per-iteration update
  double min_inlier_fraction = 0.6;

  void validate() const {
    if (max_iterations < 1 || !(max_correspondence_distance > 0.0) || !(rotation_tolerance > 0.0) ||
        !(translation_tolerance > 0.0) || !(min_inlier_fraction > 0.0 && min_inlier_fraction <= 1.0))
      throw InvalidArgument("ICP parameters must be positive (inlier fraction in (0, 1])");
  }
};

struct IcpResult {
  bool success = false;
  RigidTransform transform;  // maps source coordinates into the target frame
  double fitness = 0.0;      // RMS inlier distance, mm
  double inlier_fraction = 0.0;
  int iterations = 0;
  /// Mean truncated squared distance min(d^2, max_dist^2) before each
  /// alignment step, plus the value at the returned transform.
  std::vector<double> loss_history;
};

/// Least-squares rigid transform T minimizing sum |T src_i - dst_i|^2.
inline RigidTransform kabsch(const std::vector<Vec3>& src, const std::vector<Vec3>& dst) {
  if (src.size() != dst.size() || src.size() < 3) throw InvalidArgument("kabsch needs >= 3 paired points");
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= static_cast<double>(src.size());
  cd /= static_cast<double>(dst.size());
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return RigidTransform(r, cd - r * cs);
}

namespace detail {

struct Correspondences {
  std::vector<Vec3> src, dst;
  double truncated_loss = 0.0;  // mean over all source points
  double inlier_sq_sum = 0.0;
};

inline Correspondences correspond(const std::vector<Vec3>& source, const KdTree& tree, const RigidTransform& t,
                                  double max_dist) {
  Correspondences c;
  const double cap = max_dist * max_dist;
  for (const Vec3& p : source) {
    const Vec3 q = t.apply(p);
    const KdTree::Match m = tree.nearest(q);
    if (m.squared_distance <= cap) {
      c.src.push_back(p);
      c.dst.push_back(tree.points()[m.index]);
      c.inlier_sq_sum += m.squared_distance;
      c.truncated_loss += m.squared_distance;
    } else {
      c.truncated_loss += cap;
    }
  }
  c.truncated_loss /= static_cast<double>(source.size());
  return c;
}

}  // namespace detail

/// Point-to-point ICP of `source` onto the points indexed by `target`.
inline IcpResult icp(const PointCloud& source, const KdTree& target, const RigidTransform& init,
                     const IcpParams& params = {}) {
  params.validate();
  if (source.size() < 3 || target.size() < 3) throw InvalidArgument("ICP needs at least 3 points per cloud");
  IcpResult r;
  r.transform = init;
  for (int it = 0; it < params.max_iterations; ++it) {
    const auto c = detail::correspond(source.points, target, r.transform, params.max_correspondence_distance);
    r.loss_history.push_back(c.truncated_loss);
    if (c.src.size() < 3) {
      r.success = false;
      r.iterations = it;
      return r;
    }
    // Re-solving from the original source points keeps the step exact for
    // the pairs found under the current transform.
    const RigidTransform next = kabsch(c.src, c.dst);
    const RigidTransform delta = next * r.transform.inverse();
    r.transform = next;
    r.iterations = it + 1;
    if (delta.angle() < params.rotation_tolerance && delta.translation().norm() < params.translation_tolerance)
      break;
  }
  const auto c = detail::correspond(source.points, target, r.transform, params.max_correspondence_distance);
  r.loss_history.push_back(c.truncated_loss);
  if (c.src.size() < 3) return r;
  r.fitness = std::sqrt(c.inlier_sq_sum / static_cast<double>(c.src.size()));
  r.inlier_fraction = static_cast<double>(c.src.size()) / static_cast<double>(source.size());
  r.success = true;
  return r;
}

inline IcpResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
                     const IcpParams& params = {}) {
  if (target.size() < 3) throw InvalidArgument("ICP needs at least 3 points per cloud");
  return icp(source, KdTree(target.points), init, params);
}

}  // namespace softbubble::pose
