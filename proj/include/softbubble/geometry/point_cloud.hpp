#pragma once

#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/transform.hpp"

namespace softbubble::geometry {

/// Points in mm, tagged with the name of the frame they are expressed in.
struct PointCloud {
  std::vector<Vec3> points;
  std::string frame;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool all_finite() const {
    for (const Vec3& p : points)
      if (!p.allFinite()) return false;
    return true;
  }

  Vec3 centroid() const {
    if (points.empty()) throw InvalidArgument("centroid of an empty cloud");
    Vec3 c = Vec3::Zero();
    for (const Vec3& p : points) c += p;
    return c / static_cast<double>(points.size());
  }

  /// Re-expresses the cloud: `pose` maps current coordinates into `new_frame`.
  PointCloud transformed(const RigidTransform& pose, std::string new_frame) const {
    PointCloud out{{}, std::move(new_frame)};
    out.points.reserve(points.size());
    for (const Vec3& p : points) out.points.push_back(pose.apply(p));
    return out;
  }
};

/// Keeps the first point falling into each cubic voxel of side `voxel` mm,
/// replaced by the mean of the voxel's points. Order follows first occurrence.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel) {
  if (voxel <= 0.0) return cloud;
  struct Acc {
    Vec3 sum = Vec3::Zero();
    int count = 0;
  };
  std::unordered_map<long long, std::size_t> slot;
  std::vector<Acc> accs;
  auto key_of = [voxel](const Vec3& p) {
    const long long ix = static_cast<long long>(std::floor(p.x() / voxel)) & 0x1fffff;
    const long long iy = static_cast<long long>(std::floor(p.y() / voxel)) & 0x1fffff;
    const long long iz = static_cast<long long>(std::floor(p.z() / voxel)) & 0x1fffff;
    return (ix << 42) | (iy << 21) | iz;
  };
  for (const Vec3& p : cloud.points) {
    auto [it, inserted] = slot.try_emplace(key_of(p), accs.size());
    if (inserted) accs.emplace_back();
    accs[it->second].sum += p;
    accs[it->second].count += 1;
  }
  PointCloud out{{}, cloud.frame};
  out.points.reserve(accs.size());
  for (const Acc& a : accs) out.points.push_back(a.sum / a.count);
  return out;
}

}  // namespace softbubble::geometry
