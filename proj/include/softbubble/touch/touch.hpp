#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"
#include "softbubble/geometry/ply.hpp"
#include "softbubble/geometry/point_cloud.hpp"

namespace softbubble::touch {

using geometry::DepthImage;
using geometry::PinholeCamera;
using geometry::PointCloud;
using geometry::Vec3;

struct TouchConfig {
  double deviation_threshold = 6.0;  // mm
  int min_pixels = 50;
  bool median_filter = true;

  void validate() const {
    if (!(deviation_threshold > 0.0)) throw InvalidArgument("touch deviation_threshold must be positive");
    if (min_pixels < 1) throw InvalidArgument("touch min_pixels must be at least 1");
  }
};

/// Per-pixel mean depth of contact-free frames.
struct ReferenceFrame {
  DepthImage depth;  // 0 where no frame was valid

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  bool valid(int u, int v) const { return depth.valid(u, v); }
};

inline ReferenceFrame capture_reference(const std::vector<DepthImage>& frames) {
  if (frames.empty()) throw InvalidArgument("capture_reference needs at least one frame");
  const DepthImage& first = frames.front();
  for (const DepthImage& f : frames)
    if (!f.same_shape(first)) throw InvalidArgument("reference frames have inconsistent dimensions");
  const std::size_t n = first.size();
  std::vector<double> sum(n, 0.0);
  std::vector<int> count(n, 0);
  for (const DepthImage& f : frames)
    for (std::size_t i = 0; i < n; ++i)
      if (f.data()[i] > 0.0f) {
        sum[i] += f.data()[i];
        ++count[i];
      }
  ReferenceFrame ref{DepthImage(first.width(), first.height())};
  for (std::size_t i = 0; i < n; ++i)
    if (count[i] > 0) ref.depth.data()[i] = static_cast<float>(sum[i] / count[i]);
  return ref;
}

/// 3x3 median over the valid pixels of each neighborhood. Invalid pixels
/// stay invalid; for an even number of valid samples the lower middle wins.
inline DepthImage median3x3(const DepthImage& img) {
  DepthImage out(img.width(), img.height());
  std::array<float, 9> window{};
  for (int v = 0; v < img.height(); ++v) {
    for (int u = 0; u < img.width(); ++u) {
      if (!img.valid(u, v)) continue;
      int n = 0;
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          const int x = u + du, y = v + dv;
          if (x < 0 || y < 0 || x >= img.width() || y >= img.height() || !img.valid(x, y)) continue;
          window[n++] = img.at(x, y);
        }
      std::nth_element(window.begin(), window.begin() + (n - 1) / 2, window.begin() + n);
      out.at(u, v) = window[(n - 1) / 2];
    }
  }
  return out;
}

struct TouchResult {
  bool touch = false;
  int deviating_pixels = 0;
};

namespace detail {

inline void check_shape(const DepthImage& frame, const ReferenceFrame& ref) {
  if (!frame.same_shape(ref.depth)) throw InvalidArgument("frame and reference dimensions differ");
}

// Mask of pixels whose (optionally filtered) depth sits more than the
// threshold closer to the camera than the reference.
inline std::vector<std::uint8_t> deviation_mask(const DepthImage& frame, const ReferenceFrame& ref,
                                                const TouchConfig& cfg, DepthImage* filtered_out = nullptr) {
  check_shape(frame, ref);
  DepthImage filtered = cfg.median_filter ? median3x3(frame) : frame;
  std::vector<std::uint8_t> mask(frame.size(), 0);
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const float d = filtered.data()[i];
    const float r = ref.depth.data()[i];
    if (d > 0.0f && r > 0.0f && r - d > cfg.deviation_threshold) mask[i] = 1;
  }
  if (filtered_out) *filtered_out = std::move(filtered);
  return mask;
}

}  // namespace detail

inline TouchResult is_touch(const DepthImage& frame, const ReferenceFrame& ref, const TouchConfig& cfg = {}) {
  const auto mask = detail::deviation_mask(frame, ref, cfg);
  TouchResult r;
  r.deviating_pixels = static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  r.touch = r.deviating_pixels >= cfg.min_pixels;
  return r;
}

/// Deviating pixels deprojected into the camera frame, labelled by
/// 8-connected component in image space (labels start at 1).
struct ContactPatch {
  PointCloud points{{}, geometry::kCameraFrame};
  std::vector<int> labels;
  std::vector<std::array<int, 2>> pixels;
  std::vector<double> deviations;  // reference minus filtered depth, mm
  int components = 0;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

/// Labels 8-connected components of a row-major image mask in place.
inline int label_image_components(int width, int height, const std::vector<std::uint8_t>& mask,
                                  std::vector<int>& labels) {
  labels.assign(mask.size(), 0);
  int count = 0;
  std::vector<int> stack;
  for (int start = 0; start < width * height; ++start) {
    if (!mask[start] || labels[start]) continue;
    labels[start] = ++count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int u = cur % width, v = cur / width;
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          const int x = u + du, y = v + dv;
          if (x < 0 || y < 0 || x >= width || y >= height) continue;
          const int nb = y * width + x;
          if (mask[nb] && !labels[nb]) {
            labels[nb] = count;
            stack.push_back(nb);
          }
        }
    }
  }
  return count;
}

/// Naive geometric contact extraction. Returns an empty patch for frames that
/// do not register as touch.
inline ContactPatch extract_contact(const DepthImage& frame, const ReferenceFrame& ref, const PinholeCamera& cam,
                                    const TouchConfig& cfg = {}) {
  if (frame.width() != cam.width || frame.height() != cam.height)
    throw InvalidArgument("frame dimensions do not match the camera");
  DepthImage filtered;
  const auto mask = detail::deviation_mask(frame, ref, cfg, &filtered);
  ContactPatch patch;
  const int count = static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
  if (count < cfg.min_pixels) return patch;
  std::vector<int> image_labels;
  patch.components = label_image_components(frame.width(), frame.height(), mask, image_labels);
  for (int v = 0; v < frame.height(); ++v)
    for (int u = 0; u < frame.width(); ++u) {
      const int i = v * frame.width() + u;
      if (!mask[i]) continue;
      patch.points.points.push_back(cam.deproject(u + 0.5, v + 0.5, filtered.at(u, v)));
      patch.labels.push_back(image_labels[i]);
      patch.pixels.push_back({u, v});
      patch.deviations.push_back(ref.depth.at(u, v) - filtered.at(u, v));
    }
  return patch;
}

/// Likely contact points of a naive patch. Tension drapes free membrane
/// around a pressed object, so many deviating points never touch it. A plane
/// is fitted (in camera coordinates, depth over x and y) to the points
/// deviating by at least `core_fraction` of the deepest deviation (99th
/// percentile). Plane residuals are averaged over a (2 `smooth_radius` + 1)^2
/// pixel window of patch points; points deviating by at least `gate_fraction`
/// of the peak whose averaged residual is within `band` mm are kept, and the
/// plane is refitted to them for a few rounds. Labels are those of the parent
/// patch; `components` counts the distinct labels kept.
inline ContactPatch contact_core(const ContactPatch& patch, double band, int smooth_radius = 2,
                                 double gate_fraction = 0.7, double core_fraction = 0.85) {
  if (!(band > 0.0)) throw InvalidArgument("contact band must be positive");
  if (smooth_radius < 0) throw InvalidArgument("smoothing radius must be non-negative");
  if (!(gate_fraction >= 0.0 && gate_fraction <= core_fraction && core_fraction < 1.0))
    throw InvalidArgument("contact core fractions must satisfy 0 <= gate <= core < 1");
  if (patch.empty()) return patch;
  std::vector<double> sorted = patch.deviations;
  const std::size_t k99 = (sorted.size() - 1) * 99 / 100;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k99), sorted.end());
  const double peak = sorted[k99];
  const auto& pts = patch.points.points;
  int u0 = patch.pixels[0][0], v0 = patch.pixels[0][1], u1 = u0, v1 = v0;
  for (const auto& px : patch.pixels) {
    u0 = std::min(u0, px[0]);
    u1 = std::max(u1, px[0]);
    v0 = std::min(v0, px[1]);
    v1 = std::max(v1, px[1]);
  }
  const int gw = u1 - u0 + 1, gh = v1 - v0 + 1;
  std::vector<int> slot(static_cast<std::size_t>(gw) * gh, -1);
  for (std::size_t i = 0; i < patch.size(); ++i)
    slot[static_cast<std::size_t>(patch.pixels[i][1] - v0) * gw + (patch.pixels[i][0] - u0)] = static_cast<int>(i);
  std::vector<double> residual(patch.size());
  std::vector<std::uint8_t> keep(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) keep[i] = patch.deviations[i] >= core_fraction * peak;
  for (int round = 0; round < 3; ++round) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < patch.size(); ++i) {
      if (!keep[i]) continue;
      const Eigen::Vector3d a(1.0, pts[i].x(), pts[i].y());
      ata += a * a.transpose();
      atb += a * pts[i].z();
    }
    const Eigen::Vector3d c = ata.ldlt().solve(atb);
    if (!c.allFinite()) break;
    for (std::size_t i = 0; i < patch.size(); ++i)
      residual[i] = pts[i].z() - (c[0] + c[1] * pts[i].x() + c[2] * pts[i].y());
    for (std::size_t i = 0; i < patch.size(); ++i) {
      double sum = 0.0;
      int count = 0;
      for (int dv = -smooth_radius; dv <= smooth_radius; ++dv)
        for (int du = -smooth_radius; du <= smooth_radius; ++du) {
          const int x = patch.pixels[i][0] - u0 + du, y = patch.pixels[i][1] - v0 + dv;
          if (x < 0 || y < 0 || x >= gw || y >= gh) continue;
          const int j = slot[static_cast<std::size_t>(y) * gw + x];
          if (j < 0) continue;
          sum += residual[j];
          ++count;
        }
      keep[i] = patch.deviations[i] >= gate_fraction * peak && std::abs(sum / count) <= band;
    }
  }
  ContactPatch out;
  out.points.frame = patch.points.frame;
  std::vector<int> seen;
  for (std::size_t i = 0; i < patch.size(); ++i) {
    if (!keep[i]) continue;
    out.points.points.push_back(pts[i]);
    out.labels.push_back(patch.labels[i]);
    out.pixels.push_back(patch.pixels[i]);
    out.deviations.push_back(patch.deviations[i]);
    if (std::find(seen.begin(), seen.end(), patch.labels[i]) == seen.end()) seen.push_back(patch.labels[i]);
  }
  out.components = static_cast<int>(seen.size());
  return out;
}

inline void write_patch_ply(const std::string& path, const ContactPatch& patch) {
  geometry::write_ply(path, patch.points, &patch.labels);
}

}  // namespace softbubble::touch
