#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "softbubble/geometry/camera.hpp"
#include "softbubble/membrane/grid.hpp"
#include "softbubble/render/sensor_rig.hpp"

namespace softbubble::render {

using geometry::DepthImage;
using membrane::HeightField;

namespace detail {

// Smallest tau in [0, tau_max] where f0 + f1 tau + f2 tau^2 drops to zero.
inline std::optional<double> first_crossing(double f0, double f1, double f2, double tau_max) {
  if (f0 <= 0.0) return 0.0;
  auto value = [&](double t) { return f0 + t * (f1 + t * f2); };
  const double scale = std::abs(f1) + std::abs(f2) * std::max(1.0, tau_max);
  if (std::abs(f2) <= 1e-14 * std::max(scale, 1e-300)) {
    if (f1 >= 0.0) return std::nullopt;
    const double t = -f0 / f1;
    return t <= tau_max ? std::optional<double>(t) : std::nullopt;
  }
  const double disc = f1 * f1 - 4.0 * f2 * f0;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (f1 + std::copysign(sq, f1));
  double r1 = q / f2;
  double r2 = q != 0.0 ? f0 / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  for (double r : {r1, r2}) {
    if (r >= 0.0 && r <= tau_max) return r;
  }
  // Guard against roots lost to rounding at the cell exit.
  if (value(tau_max) <= 0.0) return tau_max;
  return std::nullopt;
}

}  // namespace detail

struct MembraneHit {
  double depth;  // camera z, mm
  Vec3 point;    // bubble frame, mm
};

/// Intersects the ray from the camera center with direction (dx, dy, 1)
/// against the bilinear membrane surface. Marches lattice cells from the rim
/// plane crossing outward.
inline std::optional<MembraneHit> intersect_membrane(const SensorRig& rig, const HeightField& hf, double dx,
                                                     double dy) {
  const auto& grid = *hf.grid;
  const double s = grid.spacing();
  const double R = grid.radius();
  const double c = rig.camera_standoff;
  const double t_max = rig.camera.max_valid_depth();
  double t = c;
  double x = dx * t;
  double y = dy * t;
  if (x * x + y * y >= R * R) return std::nullopt;

  int i = static_cast<int>(std::floor(x / s));
  int j = static_cast<int>(std::floor(y / s));
  const int step_i = dx > 0 ? 1 : -1;
  const int step_j = dy > 0 ? 1 : -1;
  const double inf = std::numeric_limits<double>::infinity();
  const double du = dx / s;
  const double dv = dy / s;

  while (grid.in_lattice(i, j) && grid.in_lattice(i + 1, j + 1)) {
    const double tx = dx != 0.0 ? ((dx > 0 ? i + 1 : i) * s) / dx : inf;
    const double ty = dy != 0.0 ? ((dy > 0 ? j + 1 : j) * s) / dy : inf;
    const double t_exit = std::min({tx, ty, t_max});
    const double z00 = hf.at(i, j);
    const double z10 = hf.at(i + 1, j);
    const double z01 = hf.at(i, j + 1);
    const double z11 = hf.at(i + 1, j + 1);
    const double a1 = z10 - z00;
    const double b1 = z01 - z00;
    const double c1 = z00 - z10 - z01 + z11;
    const double ue = dx * t / s - i;
    const double ve = dy * t / s - j;
    const double f0 = z00 + a1 * ue + b1 * ve + c1 * ue * ve - (t - c);
    const double f1 = a1 * du + b1 * dv + c1 * (ue * dv + ve * du) - 1.0;
    const double f2 = c1 * du * dv;
    if (auto tau = detail::first_crossing(f0, f1, f2, std::max(0.0, t_exit - t))) {
      const double depth = t + *tau;
      return MembraneHit{depth, {dx * depth, dy * depth, depth - c}};
    }
    if (t_exit >= t_max) return std::nullopt;
    t = t_exit;
    if (tx <= ty) i += step_i;
    if (ty <= tx) j += step_j;
    const double px = dx * t;
    const double py = dy * t;
    if (px * px + py * py > (R + 2.0 * s) * (R + 2.0 * s)) return std::nullopt;
  }
  return std::nullopt;
}

/// Renders the membrane inner surface as seen by the rig camera. Depth is the
/// camera-frame z of the hit; rays that miss, or land outside the valid range,
/// are 0.
inline DepthImage render_depth(const SensorRig& rig, const HeightField& hf) {
  const auto& cam = rig.camera;
  DepthImage img = cam.blank();
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 ray = cam.pixel_ray(u, v);
      auto hit = intersect_membrane(rig, hf, ray.x(), ray.y());
      if (hit && hit->depth >= cam.min_valid_depth() && hit->depth <= cam.max_valid_depth())
        img.at(u, v) = static_cast<float>(hit->depth);
    }
  }
  return img;
}

/// Membrane surface area (mm^2) seen by the camera: the surface mesh spanned
/// by rays through the pixel corners.
inline double in_fov_membrane_area(const SensorRig& rig, const HeightField& hf) {
  const auto& cam = rig.camera;
  const int nx = cam.width + 1;
  const int ny = cam.height + 1;
  std::vector<std::optional<Vec3>> pts(static_cast<std::size_t>(nx) * ny);
  for (int v = 0; v < ny; ++v)
    for (int u = 0; u < nx; ++u) {
      const Vec3 ray = cam.ray(u, v);
      if (auto hit = intersect_membrane(rig, hf, ray.x(), ray.y())) pts[v * nx + u] = hit->point;
    }
  double area = 0.0;
  for (int v = 0; v + 1 < ny; ++v)
    for (int u = 0; u + 1 < nx; ++u) {
      const auto& p00 = pts[v * nx + u];
      const auto& p10 = pts[v * nx + u + 1];
      const auto& p01 = pts[(v + 1) * nx + u];
      const auto& p11 = pts[(v + 1) * nx + u + 1];
      if (!(p00 && p10 && p01 && p11)) continue;
      area += 0.5 * (*p10 - *p00).cross(*p01 - *p00).norm() + 0.5 * (*p10 - *p11).cross(*p01 - *p11).norm();
    }
  return area;
}

}  // namespace softbubble::render
