#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "softbubble/geometry/mesh.hpp"

namespace softbubble::geometry {

/// Moller-Trumbore. Returns the ray parameter of a hit with t > t_min.
inline std::optional<double> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                                const Vec3& b, const Vec3& c, double t_min = 1e-9) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  const double scale = e1.norm() * e2.norm();
  if (std::abs(det) <= 1e-14 * scale) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  constexpr double kEdge = 1e-12;
  if (u < -kEdge || u > 1.0 + kEdge) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < -kEdge || u + v > 1.0 + kEdge) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= t_min) return std::nullopt;
  return t;
}

/// Nearest positive hit distance along a unit direction, testing every triangle.
inline std::optional<double> ray_cast(const Vec3& origin, const Vec3& dir, const TriangleMesh& mesh) {
  std::optional<double> best;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    auto t = intersect_triangle(origin, dir, mesh.corner(i, 0), mesh.corner(i, 1), mesh.corner(i, 2));
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

/// Bounding volume hierarchy over a mesh for repeated ray queries.
/// Holds a copy of the mesh, so it stays valid independently of the source.
class MeshBvh {
 public:
  explicit MeshBvh(TriangleMesh mesh) : mesh_(std::move(mesh)) {
    order_.resize(mesh_.size());
    std::iota(order_.begin(), order_.end(), 0);
    centroids_.reserve(mesh_.size());
    for (std::size_t i = 0; i < mesh_.size(); ++i)
      centroids_.push_back((mesh_.corner(i, 0) + mesh_.corner(i, 1) + mesh_.corner(i, 2)) / 3.0);
    if (!order_.empty()) build(0, order_.size());
  }

  const TriangleMesh& mesh() const { return mesh_; }

  std::optional<double> cast(const Vec3& origin, const Vec3& dir) const {
    if (nodes_.empty()) return std::nullopt;
    const Vec3 inv_dir(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      if (!slab_hit(node.box, origin, inv_dir, best)) continue;
      if (node.count > 0) {
        for (std::size_t k = node.first; k < node.first + node.count; ++k) {
          const std::size_t tri = order_[k];
          auto t = intersect_triangle(origin, dir, mesh_.corner(tri, 0), mesh_.corner(tri, 1),
                                      mesh_.corner(tri, 2));
          if (t && *t < best) best = *t;
        }
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
    }
    if (std::isinf(best)) return std::nullopt;
    return best;
  }

 private:
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    std::size_t first = 0;
    std::size_t count = 0;
  };

  static constexpr std::size_t kLeafSize = 4;

  int build(std::size_t first, std::size_t last) {
    Node node;
    Aabb cbox;
    for (std::size_t k = first; k < last; ++k) {
      for (int c = 0; c < 3; ++c) node.box.extend(mesh_.corner(order_[k], c));
      cbox.extend(centroids_[order_[k]]);
    }
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (last - first <= kLeafSize) {
      nodes_[index].first = first;
      nodes_[index].count = last - first;
      return index;
    }
    int axis = 0;
    cbox.extent().maxCoeff(&axis);
    const std::size_t mid = (first + last) / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + last,
                     [&](std::size_t a, std::size_t b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const int left = build(first, mid);
    const int right = build(mid, last);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  static bool slab_hit(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_max) {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double lo = (box.lo[a] - origin[a]) * inv_dir[a];
      double hi = (box.hi[a] - origin[a]) * inv_dir[a];
      if (std::isnan(lo) || std::isnan(hi)) {
        // Ray parallel to the slab and lying on its boundary plane.
        if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return false;
        continue;
      }
      if (lo > hi) std::swap(lo, hi);
      // Pad so that hits exactly on a box face are not culled.
      t0 = std::max(t0, lo - 1e-9);
      t1 = std::min(t1, hi + 1e-9);
      if (t0 > t1) return false;
    }
    return true;
  }

  TriangleMesh mesh_;
  std::vector<std::size_t> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

}  // namespace softbubble::geometry
