#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/transform.hpp"

namespace softbubble::geometry {

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool empty() const { return (lo.array() > hi.array()).any(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
};

using Triangle = std::array<int, 3>;

/// Indexed triangle mesh in mm. Zero-area triangles are removed on
/// construction; `dropped_degenerate()` reports how many.
class TriangleMesh {
 public:
  static constexpr double kDegenerateArea = 1e-12;  // mm^2

  TriangleMesh() = default;

  TriangleMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
      : vertices_(std::move(vertices)) {
    const int n = static_cast<int>(vertices_.size());
    triangles_.reserve(triangles.size());
    for (const Triangle& t : triangles) {
      for (int idx : t) {
        if (idx < 0 || idx >= n) {
          throw InvalidArgument("triangle index out of range: " + std::to_string(idx));
        }
      }
      if (area(t) <= kDegenerateArea) {
        ++dropped_;
        continue;
      }
      triangles_.push_back(t);
    }
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::size_t size() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }
  std::size_t dropped_degenerate() const { return dropped_; }

  const Vec3& corner(std::size_t tri, int k) const { return vertices_[triangles_[tri][k]]; }

  double area(const Triangle& t) const {
    return 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
  }

  double surface_area() const {
    double a = 0.0;
    for (const Triangle& t : triangles_) a += area(t);
    return a;
  }

  Aabb bounds() const {
    Aabb box;
    for (const Triangle& t : triangles_)
      for (int idx : t) box.extend(vertices_[idx]);
    return box;
  }

  TriangleMesh transformed(const RigidTransform& pose) const {
    TriangleMesh out = *this;
    for (Vec3& v : out.vertices_) v = pose.apply(v);
    return out;
  }

  /// Concatenates two meshes into one (used to build multi-object scenes).
  static TriangleMesh merge(const TriangleMesh& a, const TriangleMesh& b) {
    std::vector<Vec3> verts = a.vertices_;
    verts.insert(verts.end(), b.vertices_.begin(), b.vertices_.end());
    std::vector<Triangle> tris = a.triangles_;
    const int offset = static_cast<int>(a.vertices_.size());
    for (Triangle t : b.triangles_) {
      for (int& idx : t) idx += offset;
      tris.push_back(t);
    }
    return TriangleMesh(std::move(verts), std::move(tris));
  }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Triangle> triangles_;
  std::size_t dropped_ = 0;
};

}  // namespace softbubble::geometry
