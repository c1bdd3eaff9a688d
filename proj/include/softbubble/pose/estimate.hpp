#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/point_cloud.hpp"
#include "softbubble/geometry/transform.hpp"
#include "softbubble/pose/icp.hpp"
#include "softbubble/pose/kdtree.hpp"

namespace softbubble::pose {

using geometry::Quat;

inline constexpr double kMaxCropFraction = 0.25;
inline constexpr int kMaxInits = 12;

/// Drops the model points whose coordinate along `contact_normal` falls in
/// the far `fraction` of the model's extent along that axis (the side
/// opposite the contact face).
inline PointCloud crop_model(const PointCloud& model, const Vec3& contact_normal, double fraction) {
  if (model.empty()) throw InvalidArgument("crop_model needs a nonempty model");
  if (!(fraction >= 0.0 && fraction <= kMaxCropFraction))
    throw InvalidArgument("crop fraction must lie in [0, 0.25]");
  const Vec3 n = contact_normal.normalized();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Vec3& p : model.points) {
    lo = std::min(lo, p.dot(n));
    hi = std::max(hi, p.dot(n));
  }
  if (fraction == 0.0) return model;
  const double cut = lo + fraction * (hi - lo);
  PointCloud out{{}, model.frame};
  for (const Vec3& p : model.points)
    if (p.dot(n) >= cut) out.points.push_back(p);
  return out;
}

struct PoseEstimate {
  bool success = false;
  RigidTransform pose;  // object in the frame of the input patch
  double fitness = 0.0;
  double inlier_fraction = 0.0;
  int init_index = -1;
  int iterations = 0;
};

struct PoseParams {
  IcpParams icp;
  double crop_fraction = 0.25;
  double source_voxel = 2.0;  // mm; 0 disables downsampling of the patch
};

/// Pose hypothesis with orientation `orientation` whose translation puts
/// the centroid of the model's contact-side band onto the patch centroid.
/// The band depth matches the patch's own extent along the contact normal.
inline RigidTransform centroid_aligned(const PointCloud& patch, const PointCloud& model, const Vec3& contact_normal,
                                       const Quat& orientation) {
  const Vec3 n_obj = contact_normal.normalized();
  const Vec3 n_world = orientation * n_obj;
  double plo = std::numeric_limits<double>::infinity(), phi = -plo;
  for (const Vec3& p : patch.points) {
    plo = std::min(plo, p.dot(n_world));
    phi = std::max(phi, p.dot(n_world));
  }
  double mhi = -std::numeric_limits<double>::infinity();
  for (const Vec3& p : model.points) mhi = std::max(mhi, p.dot(n_obj));
  const double band = std::max(1.0, phi - plo);
  Vec3 c = Vec3::Zero();
  int count = 0;
  for (const Vec3& p : model.points)
    if (p.dot(n_obj) >= mhi - band) {
      c += p;
      ++count;
    }
  c /= std::max(count, 1);
  return RigidTransform(orientation, patch.centroid() - orientation * c);
}

namespace detail {

inline PoseEstimate run_inits(const PointCloud& patch, const PointCloud& cropped, const KdTree& tree,
                              const Vec3& contact_normal, const std::vector<Quat>& orientations,
                              const PoseParams& params) {
  const PointCloud source =
      params.source_voxel > 0.0 ? geometry::voxel_downsample(patch, params.source_voxel) : patch;
  PoseEstimate best;
  if (source.size() < 3) return best;
  for (std::size_t k = 0; k < orientations.size(); ++k) {
    const RigidTransform guess = centroid_aligned(patch, cropped, contact_normal, orientations[k]);
    // ICP aligns the patch into the model frame, i.e. estimates guess^-1.
    const IcpResult r = icp(source, tree, guess.inverse(), params.icp);
    if (!r.success || r.inlier_fraction < params.icp.min_inlier_fraction) continue;
    if (!best.success || r.fitness < best.fitness) {
      best = {true, r.transform.inverse(), r.fitness, r.inlier_fraction, static_cast<int>(k), r.iterations};
    }
  }
  return best;
}

}  // namespace detail

/// Orientations `face_orientation * Rot(n, 2 pi k / count)` evenly spaced about
/// the contact normal (object frame).
inline std::vector<Quat> init_orientations(const Quat& face_orientation, const Vec3& contact_normal, int count) {
  std::vector<Quat> out;
  for (int k = 0; k < count; ++k)
    out.push_back(face_orientation *
                  Quat(Eigen::AngleAxisd(2.0 * std::numbers::pi * k / count, contact_normal.normalized())));
  return out;
}

/// Best ICP fit of `model` (object frame) to a contact patch among `n_inits`
/// orientations about the contact normal.
inline PoseEstimate estimate_pose(const PointCloud& patch, const PointCloud& model, const Vec3& contact_normal,
                                  const Quat& face_orientation, int n_inits, const PoseParams& params = {}) {
  if (n_inits < 1 || n_inits > kMaxInits) throw InvalidArgument("number of initializations must lie in 1..12");
  if (patch.empty()) throw InvalidArgument("estimate_pose needs a nonempty patch");
  params.icp.validate();
  const PointCloud cropped = crop_model(model, contact_normal, params.crop_fraction);
  const KdTree tree(cropped.points);
  return detail::run_inits(patch, cropped, tree, contact_normal,
                           init_orientations(face_orientation, contact_normal, n_inits), params);
}

/// Rotation error (rad) up to the object's rotational symmetry about `axis`
/// (object frame). `order` 0 means continuous symmetry.
inline double symmetric_rotation_error(const Quat& estimate, const Quat& truth, const Vec3& axis, int order) {
  const Vec3 a = axis.normalized();
  const Quat rel = truth.conjugate() * estimate;
  if (order == 0) {
    // Remove the twist about the axis; the remaining swing is the error.
    const Vec3 twisted = rel * a;
    return std::acos(std::clamp(twisted.dot(a), -1.0, 1.0));
  }
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < std::max(1, order); ++k) {
    const Quat sym(Eigen::AngleAxisd(2.0 * std::numbers::pi * k / std::max(1, order), a));
    best = std::min(best, RigidTransform(sym * rel, Vec3::Zero()).angle());
  }
  return best;
}

}  // namespace softbubble::pose
