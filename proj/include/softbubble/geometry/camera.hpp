#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/point_cloud.hpp"
#include "softbubble/geometry/transform.hpp"

namespace softbubble::geometry {

inline constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

inline constexpr const char* kCameraFrame = "Camera";

/// Per-pixel depth in mm along the optical axis. 0 marks an invalid pixel.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height, float fill = 0.0f)
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width <= 0 || height <= 0) throw InvalidArgument("depth image dimensions must be positive");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  float& at(int u, int v) { return data_[static_cast<std::size_t>(v) * width_ + u]; }
  float at(int u, int v) const { return data_[static_cast<std::size_t>(v) * width_ + u]; }
  bool valid(int u, int v) const { return at(u, v) > 0.0f; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (float d : data_) n += d > 0.0f;
    return n;
  }

  bool same_shape(const DepthImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const DepthImage&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

/// Ideal pinhole with a symmetric field of view and the principal point at
/// the image center. Pixel (u, v) samples the ray through (u + 0.5, v + 0.5).
/// Camera frame: +x right, +y down, +z along the optical axis.
struct PinholeCamera {
  int width = 224;
  int height = 171;
  double hfov_deg = 62.0;
  double vfov_deg = 45.0;
  double min_range = 100.0;   // mm
  double max_range = 4000.0;  // mm

  double fx() const { return 0.5 * width / std::tan(0.5 * deg2rad(hfov_deg)); }
  double fy() const { return 0.5 * height / std::tan(0.5 * deg2rad(vfov_deg)); }
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }

  void validate() const {
    if (width <= 0 || height <= 0) throw InvalidArgument("camera dimensions must be positive");
    if (!(hfov_deg > 0.0 && hfov_deg < 180.0 && vfov_deg > 0.0 && vfov_deg < 180.0))
      throw InvalidArgument("camera field of view must lie in (0, 180) degrees");
    if (!(min_range > 0.0 && min_range < max_range))
      throw InvalidArgument("camera requires 0 < min_range < max_range");
  }

  /// Depth values a valid pixel may carry.
  double min_valid_depth() const { return 0.5 * min_range; }
  double max_valid_depth() const { return max_range; }

  /// Ray direction through continuous image coordinates, scaled so z == 1.
  Vec3 ray(double x, double y) const { return {(x - cx()) / fx(), (y - cy()) / fy(), 1.0}; }
  Vec3 pixel_ray(int u, int v) const { return ray(u + 0.5, v + 0.5); }

  /// Camera-frame point at continuous image coordinates (x, y) and depth d.
  Vec3 deproject(double x, double y, double depth) const { return depth * ray(x, y); }

  struct Projection {
    double x;
    double y;
    double depth;
  };
  std::optional<Projection> project(const Vec3& p) const {
    if (p.z() <= 0.0) return std::nullopt;
    return Projection{fx() * p.x() / p.z() + cx(), fy() * p.y() / p.z() + cy(), p.z()};
  }

  /// Area in mm^2 of the image rectangle on a plane `distance` mm away.
  double footprint_area(double distance) const {
    return (2.0 * distance * std::tan(0.5 * deg2rad(hfov_deg))) *
           (2.0 * distance * std::tan(0.5 * deg2rad(vfov_deg)));
  }

  DepthImage blank() const { return DepthImage(width, height); }
};

/// Back-projects every valid pixel into the camera frame.
inline PointCloud deproject(const DepthImage& img, const PinholeCamera& cam) {
  if (img.width() != cam.width || img.height() != cam.height) {
    throw InvalidArgument("depth image dimensions do not match the camera");
  }
  PointCloud cloud{{}, kCameraFrame};
  cloud.points.reserve(img.valid_count());
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u)
      if (img.valid(u, v)) cloud.points.push_back(cam.deproject(u + 0.5, v + 0.5, img.at(u, v)));
  return cloud;
}

}  // namespace softbubble::geometry
