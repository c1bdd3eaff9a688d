#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "softbubble/error.hpp"
#include "softbubble/geometry/mesh.hpp"
#include "softbubble/geometry/transform.hpp"
#include "softbubble/membrane/bubble_config.hpp"
#include "softbubble/membrane/grid.hpp"

namespace softbubble::membrane {

using geometry::RigidTransform;
using geometry::TriangleMesh;
using geometry::Vec3;

inline GridPtr make_grid(const BubbleConfig& cfg) {
  cfg.validate();
  return DiskGrid::make(cfg.rim_radius, cfg.grid_spacing);
}

/// Samples the lowest surface of a posed mesh above every interior node.
///
/// `pose` maps mesh coordinates into the bubble frame (rim plane z = 0,
/// membrane on the +z side). Each triangle is scan-converted over the nodes its
/// xy projection covers, which is equivalent to casting a vertical ray per node
/// and keeping the lowest hit. Vertical faces project to zero area and never
/// define the obstacle.
inline ObstacleField build_obstacle(const TriangleMesh& mesh, const RigidTransform& pose, const BubbleConfig& cfg) {
  ObstacleField field(make_grid(cfg));
  const DiskGrid& grid = *field.grid;
  const double s = grid.spacing();
  const int h = grid.half();
  for (const Vec3& v : mesh.vertices()) {
    const Vec3 p = pose.apply(v);
    if (p.z() <= 0.0 && std::hypot(p.x(), p.y()) < cfg.rim_radius) {
      throw InvalidArgument("object intersects the rim plane");
    }
  }
  for (std::size_t t = 0; t < mesh.size(); ++t) {
    const Vec3 a = pose.apply(mesh.corner(t, 0));
    const Vec3 b = pose.apply(mesh.corner(t, 1));
    const Vec3 c = pose.apply(mesh.corner(t, 2));
    const double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    const double scale = (b - a).head<2>().norm() * (c - a).head<2>().norm();
    if (std::abs(det) <= 1e-12 * std::max(scale, 1e-300)) continue;
    const int i0 = std::max(-h, static_cast<int>(std::ceil(std::min({a.x(), b.x(), c.x()}) / s - 1e-9)));
    const int i1 = std::min(h, static_cast<int>(std::floor(std::max({a.x(), b.x(), c.x()}) / s + 1e-9)));
    const int j0 = std::max(-h, static_cast<int>(std::ceil(std::min({a.y(), b.y(), c.y()}) / s - 1e-9)));
    const int j1 = std::min(h, static_cast<int>(std::floor(std::max({a.y(), b.y(), c.y()}) / s + 1e-9)));
    const double inv = 1.0 / det;
    constexpr double kEdge = 1e-9;
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const int node = grid.index(i, j);
        if (!grid.interior(node)) continue;
        const double x = i * s;
        const double y = j * s;
        const double l1 = ((x - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (y - a.y())) * inv;
        const double l2 = ((b.x() - a.x()) * (y - a.y()) - (x - a.x()) * (b.y() - a.y())) * inv;
        const double l0 = 1.0 - l1 - l2;
        if (l0 < -kEdge || l1 < -kEdge || l2 < -kEdge) continue;
        const double z = l0 * a.z() + l1 * b.z() + l2 * c.z();
        field.phi[node] = std::min(field.phi[node], z);
      }
    }
  }
  if (field.min_height() <= 0.0) throw InvalidArgument("object intersects the rim plane");
  return field;
}

/// Obstacle of a horizontal plane at height `z` covering the whole disk.
inline ObstacleField flat_obstacle(const BubbleConfig& cfg, double z) {
  if (!(z > 0.0)) throw InvalidArgument("plate height must be above the rim plane");
  ObstacleField field(make_grid(cfg));
  for (int node : field.grid->interior_nodes()) field.phi[node] = z;
  return field;
}

/// Pointwise minimum of two obstacles on the same grid.
inline ObstacleField combine(const ObstacleField& a, const ObstacleField& b) {
  if (a.grid != b.grid) throw InvalidArgument("obstacle fields live on different grids");
  ObstacleField out = a;
  for (std::size_t n = 0; n < out.phi.size(); ++n) out.phi[n] = std::min(a.phi[n], b.phi[n]);
  return out;
}

/// Deepest intrusion of the obstacle below the rest membrane, in mm. Negative
/// when the object hovers clear of it; -inf for an empty field.
inline double penetration(const ObstacleField& field, const BubbleConfig& cfg) {
  double best = -std::numeric_limits<double>::infinity();
  const DiskGrid& grid = *field.grid;
  for (int node : grid.interior_nodes()) {
    if (!std::isfinite(field.phi[node])) continue;
    best = std::max(best, cfg.rest_height(std::hypot(grid.x_of(node), grid.y_of(node))) - field.phi[node]);
  }
  return best;
}

/// The same obstacle translated by `dz` along the bubble axis.
inline ObstacleField shifted(const ObstacleField& field, double dz) {
  ObstacleField out = field;
  for (double& v : out.phi)
    if (std::isfinite(v)) v += dz;
  if (!out.empty() && out.min_height() <= 0.0) throw InvalidArgument("object intersects the rim plane");
  return out;
}

}  // namespace softbubble::membrane
