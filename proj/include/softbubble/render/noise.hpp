#pragma once

#include <cmath>
#include <cstdint>

#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"
#include "softbubble/random.hpp"

namespace softbubble::render {

using geometry::DepthImage;
using geometry::PinholeCamera;

/// Near-range time-of-flight artifacts.
struct NoiseModel {
  double gaussian_sigma_fraction = 0.01;  // relative depth noise, at most 0.02

  struct DarkRegion {
    bool enabled = false;
    double emitter_offset = 10.0;  // mm, emitter sits at x = -offset in the camera frame
    double bias_fraction = 0.05;   // unlit pixels read this much further
  } dark_region;

  struct Glare {
    bool enabled = false;
    double incidence_threshold_deg = 5.0;
    double dropout_probability = 0.9;
  } glare;

  std::uint64_t seed = 0;

  static constexpr double kMaxSigmaFraction = 0.02;

  void validate() const {
    if (!(gaussian_sigma_fraction >= 0.0 && gaussian_sigma_fraction <= kMaxSigmaFraction))
      throw InvalidArgument("gaussian_sigma_fraction must lie in [0, 0.02]");
    if (dark_region.bias_fraction < 0.0) throw InvalidArgument("dark region bias must be non-negative");
    if (!(glare.dropout_probability >= 0.0 && glare.dropout_probability <= 1.0))
      throw InvalidArgument("glare dropout probability must lie in [0, 1]");
    if (!(glare.incidence_threshold_deg >= 0.0 && glare.incidence_threshold_deg < 90.0))
      throw InvalidArgument("glare incidence threshold must lie in [0, 90) degrees");
  }

  static NoiseModel none() {
    NoiseModel nm;
    nm.gaussian_sigma_fraction = 0.0;
    return nm;
  }

  bool is_identity() const {
    return gaussian_sigma_fraction == 0.0 && !dark_region.enabled && !glare.enabled;
  }
};

/// True where a camera-frame point lies outside the emitter frustum.
inline bool in_dark_region(const PinholeCamera& cam, const NoiseModel::DarkRegion& dr, const geometry::Vec3& p) {
  const double tan_h = std::tan(0.5 * geometry::deg2rad(cam.hfov_deg));
  const double tan_v = std::tan(0.5 * geometry::deg2rad(cam.vfov_deg));
  const double ex = (p.x() + dr.emitter_offset) / p.z();
  const double ey = p.y() / p.z();
  return std::abs(ex) > tan_h || std::abs(ey) > tan_v;
}

/// Angle (deg) between the pixel ray and the surface normal estimated from
/// neighboring valid pixels; negative if the normal cannot be estimated.
inline double incidence_angle_deg(const DepthImage& img, const PinholeCamera& cam, int u, int v) {
  auto point = [&](int uu, int vv) { return cam.deproject(uu + 0.5, vv + 0.5, img.at(uu, vv)); };
  auto valid = [&](int uu, int vv) {
    return uu >= 0 && vv >= 0 && uu < img.width() && vv < img.height() && img.valid(uu, vv);
  };
  const int ul = valid(u - 1, v) ? u - 1 : u;
  const int ur = valid(u + 1, v) ? u + 1 : u;
  const int vu = valid(u, v - 1) ? v - 1 : v;
  const int vd = valid(u, v + 1) ? v + 1 : v;
  if (ul == ur || vu == vd) return -1.0;
  const geometry::Vec3 n = (point(ur, v) - point(ul, v)).cross(point(u, vd) - point(u, vu));
  const geometry::Vec3 ray = cam.pixel_ray(u, v);
  const double c = std::abs(n.dot(ray)) / (n.norm() * ray.norm());
  return geometry::rad2deg(std::acos(std::min(1.0, c)));
}

/// Applies glare dropout, dark-region bias and multiplicative Gaussian noise,
/// in that order. Deterministic in nm.seed.
inline DepthImage apply_noise(const DepthImage& img, const PinholeCamera& cam, const NoiseModel& nm) {
  nm.validate();
  if (img.width() != cam.width || img.height() != cam.height)
    throw InvalidArgument("depth image dimensions do not match the camera");
  if (nm.is_identity()) return img;
  DepthImage out = img;
  Rng glare_rng(mix_seed(nm.seed, 1));
  Rng gauss_rng(mix_seed(nm.seed, 2));
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      if (!img.valid(u, v)) continue;
      double d = img.at(u, v);
      if (nm.glare.enabled) {
        const double inc = incidence_angle_deg(img, cam, u, v);
        const bool candidate = inc >= 0.0 && inc < nm.glare.incidence_threshold_deg;
        // One draw per valid pixel keeps the stream aligned across images.
        const bool drop = glare_rng.uniform() < nm.glare.dropout_probability;
        if (candidate && drop) {
          out.at(u, v) = 0.0f;
          continue;
        }
      }
      if (nm.dark_region.enabled && in_dark_region(cam, nm.dark_region, cam.deproject(u + 0.5, v + 0.5, d)))
        d *= 1.0 + nm.dark_region.bias_fraction;
      if (nm.gaussian_sigma_fraction > 0.0) d *= 1.0 + nm.gaussian_sigma_fraction * gauss_rng.normal();
      out.at(u, v) = d > 0.0 ? static_cast<float>(d) : 0.0f;
    }
  }
  return out;
}

}  // namespace softbubble::render
