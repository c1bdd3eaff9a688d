#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"
#include "softbubble/render/sensor_rig.hpp"

namespace softbubble::classify {

using geometry::DepthImage;

/// Parameters of the contact-shape descriptor.
struct ContactShapeParams {
  double cell = 1.0;          // mm, metric raster pitch in the bubble xy plane
  double half_extent = 64.0;  // mm
  double smoothing = 1.5;     // mm, Gaussian sigma for the height raster
  double plateau_band = 0.75;  // mm above the contact level still counted as (soft) contact
  double core_fraction = 0.9;  // cells this close to the peak deformation set the contact level
  double gate_fraction = 0.3;  // cells deformed less than this fraction are ignored
  double ring_width = 2.0;    // mm
  int rings = 16;
  int harmonics = 6;
};

namespace detail {

// Separable normalized Gaussian convolution of (value * weight, weight).
inline void smooth_normalized(std::vector<double>& value, std::vector<double>& weight, int n, double sigma_cells) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma_cells)));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) kernel[k + radius] = std::exp(-0.5 * k * k / (sigma_cells * sigma_cells));
  std::vector<double> tv(value.size()), tw(weight.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double sv = 0.0, sw = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int a = pass == 0 ? i + k : i;
          const int b = pass == 0 ? j : j + k;
          if (a < 0 || b < 0 || a >= n || b >= n) continue;
          sv += kernel[k + radius] * value[b * n + a];
          sw += kernel[k + radius] * weight[b * n + a];
        }
        tv[j * n + i] = sv;
        tw[j * n + i] = sw;
      }
    value.swap(tv);
    weight.swap(tw);
  }
}

}  // namespace detail

/// Translation- and rotation-invariant description of the contact region.
///
/// Pixels are deprojected into the bubble frame and rasterized as a height
/// map over xy. The contact level is the mean height of the most deformed
/// cells, and cells within `plateau_band` of it (connected to those cells)
/// form a soft contact mask. The descriptor holds the magnitudes of the
/// mask's angular Fourier harmonics on rings around its centroid, followed
/// by the mask area and the peak deformation.
inline std::vector<double> contact_shape_features(const DepthImage& image, const render::SensorRig& rig,
                                                  const ContactShapeParams& p = {}) {
  const auto& cam = rig.camera;
  const int n = static_cast<int>(std::lround(2.0 * p.half_extent / p.cell));
  std::vector<double> zsum(static_cast<std::size_t>(n) * n, 0.0), wsum(zsum.size(), 0.0);
  const double sx = static_cast<double>(cam.width) / image.width();
  const double sy = static_cast<double>(cam.height) / image.height();
  for (int v = 0; v < image.height(); ++v)
    for (int u = 0; u < image.width(); ++u) {
      if (!image.valid(u, v)) continue;
      const geometry::Vec3 q = cam.deproject((u + 0.5) * sx, (v + 0.5) * sy, image.at(u, v));
      const int i = static_cast<int>(std::floor((q.x() + p.half_extent) / p.cell));
      const int j = static_cast<int>(std::floor((q.y() + p.half_extent) / p.cell));
      if (i < 0 || j < 0 || i >= n || j >= n) continue;
      zsum[j * n + i] += q.z() - rig.camera_standoff;
      wsum[j * n + i] += 1.0;
    }
  detail::smooth_normalized(zsum, wsum, n, p.smoothing / p.cell);

  // Deformation below the rest paraboloid; the contact face is the lowest
  // membrane level around the point of deepest deformation.
  std::vector<double> z(zsum.size(), 0.0), deform(zsum.size(), -1e300);
  double emax = -1e300;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * n + i;
      if (wsum[k] <= 0.05) continue;
      z[k] = zsum[k] / wsum[k];
      const double x = (i + 0.5) * p.cell - p.half_extent, y = (j + 0.5) * p.cell - p.half_extent;
      const double r = std::hypot(x, y);
      if (r >= rig.bubble.rim_radius) continue;
      deform[k] = rig.bubble.rest_height(r) - z[k];
      emax = std::max(emax, deform[k]);
    }
  const int harmonics = p.harmonics + 1;
  std::vector<double> features(static_cast<std::size_t>(p.rings) * harmonics + 2, 0.0);
  if (emax <= 0.0) return features;

  double level = 0.0;
  int core = 0;
  for (std::size_t k = 0; k < z.size(); ++k)
    if (deform[k] >= p.core_fraction * emax) {
      level += z[k];
      ++core;
    }
  level /= core;

  // Soft mask of cells near the contact level, restricted to the connected
  // regions that reach the deepest deformation.
  std::vector<double> mask(z.size(), 0.0);
  for (std::size_t k = 0; k < z.size(); ++k)
    if (deform[k] >= p.gate_fraction * emax)
      mask[k] = std::clamp(1.0 - std::abs(z[k] - level) / p.plateau_band, 0.0, 1.0);
  std::vector<std::uint8_t> keep(z.size(), 0);
  std::vector<int> stack;
  for (std::size_t k = 0; k < z.size(); ++k)
    if (deform[k] >= p.core_fraction * emax && mask[k] > 0.0 && !keep[k]) {
      keep[k] = 1;
      stack.push_back(static_cast<int>(k));
    }
  while (!stack.empty()) {
    const int k = stack.back();
    stack.pop_back();
    const int i = k % n, j = k / n;
    const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
    for (const auto& q : nb) {
      if (q[0] < 0 || q[1] < 0 || q[0] >= n || q[1] >= n) continue;
      const int kk = q[1] * n + q[0];
      if (mask[kk] > 0.0 && !keep[kk]) {
        keep[kk] = 1;
        stack.push_back(kk);
      }
    }
  }
  double area = 0.0, cx = 0.0, cy = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * n + i;
      if (!keep[k]) mask[k] = 0.0;
      area += mask[k];
      cx += mask[k] * i;
      cy += mask[k] * j;
    }
  if (area <= 0.0) return features;
  cx /= area;
  cy /= area;
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(p.rings) * harmonics);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double m = mask[j * n + i];
      if (m <= 0.0) continue;
      const double dx = (i - cx) * p.cell, dy = (j - cy) * p.cell;
      const int ring = static_cast<int>(std::hypot(dx, dy) / p.ring_width);
      if (ring >= p.rings) continue;
      const double th = std::atan2(dy, dx);
      for (int h = 0; h < harmonics; ++h) acc[ring * harmonics + h] += m * std::polar(1.0, h * th);
    }
  const double cell_area = p.cell * p.cell;
  for (std::size_t k = 0; k < acc.size(); ++k) features[k] = std::abs(acc[k]) * cell_area;
  features[acc.size()] = area * cell_area;
  features[acc.size() + 1] = emax;
  return features;
}

struct RingHarmonicParams {
  int rings = 20;
  double ring_width = 2.0;  // mm
  int harmonics = 8;
  double centroid_fraction = 0.5;  // deformation above this fraction of the peak locates the centre
};

/// Angular harmonics of the peak-normalized deformation map on rings around
/// its centre, each ring averaged over its pixels, plus the peak deformation
/// in units of 40 mm.
inline std::vector<double> ring_harmonic_features(const DepthImage& image, const DepthImage& reference,
                                                  const render::SensorRig& rig, const RingHarmonicParams& p = {}) {
  if (!image.same_shape(reference)) throw InvalidArgument("image and reference dimensions differ");
  const auto& cam = rig.camera;
  const double sx = static_cast<double>(cam.width) / image.width();
  const double sy = static_cast<double>(cam.height) / image.height();
  struct Sample {
    double x, y, d;
  };
  std::vector<Sample> samples;
  double dmax = 0.0;
  for (int v = 0; v < image.height(); ++v)
    for (int u = 0; u < image.width(); ++u) {
      const float d = image.at(u, v), r = reference.at(u, v);
      if (d <= 0.0f || r <= 0.0f) continue;
      const double dev = std::max(0.0, static_cast<double>(r) - d);
      const geometry::Vec3 q = cam.deproject((u + 0.5) * sx, (v + 0.5) * sy, d);
      samples.push_back({q.x(), q.y(), dev});
      dmax = std::max(dmax, dev);
    }
  const int harmonics = p.harmonics + 1;
  std::vector<double> f(static_cast<std::size_t>(p.rings) * harmonics + 1, 0.0);
  if (dmax <= 0.0) return f;
  double sw = 0.0, cx = 0.0, cy = 0.0;
  for (const Sample& s : samples) {
    const double w = std::max(0.0, s.d - p.centroid_fraction * dmax);
    sw += w;
    cx += w * s.x;
    cy += w * s.y;
  }
  cx /= sw;
  cy /= sw;
  std::vector<std::complex<double>> acc(static_cast<std::size_t>(p.rings) * harmonics);
  std::vector<int> count(p.rings, 0);
  for (const Sample& s : samples) {
    const double dx = s.x - cx, dy = s.y - cy;
    const int ring = static_cast<int>(std::hypot(dx, dy) / p.ring_width);
    if (ring >= p.rings) continue;
    ++count[ring];
    const double th = std::atan2(dy, dx);
    for (int h = 0; h < harmonics; ++h) acc[ring * harmonics + h] += (s.d / dmax) * std::polar(1.0, h * th);
  }
  for (int ring = 0; ring < p.rings; ++ring)
    if (count[ring] > 0)
      for (int h = 0; h < harmonics; ++h)
        f[ring * harmonics + h] = std::abs(acc[ring * harmonics + h]) / count[ring];
  f.back() = dmax / 40.0;
  return f;
}

/// Ring harmonics of the deformation followed by the contact-shape features.
inline std::vector<double> contact_descriptor(const DepthImage& image, const DepthImage& reference,
                                              const render::SensorRig& rig) {
  std::vector<double> f = ring_harmonic_features(image, reference, rig);
  const std::vector<double> shape = contact_shape_features(image, rig);
  f.insert(f.end(), shape.begin(), shape.end());
  return f;
}

}  // namespace softbubble::classify
