#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "softbubble/error.hpp"
#include "softbubble/geometry/camera.hpp"
#include "softbubble/geometry/transform.hpp"
#include "softbubble/membrane/bubble_config.hpp"

namespace softbubble::render {

using geometry::PinholeCamera;
using geometry::RigidTransform;
using geometry::Vec3;
using membrane::BubbleConfig;

inline constexpr const char* kBubbleFrame = "EE";

/// Internal camera on the bubble axis, `camera_standoff` mm below the rim
/// plane, looking along +z of the bubble frame. Camera axes coincide with the
/// bubble axes.
struct SensorRig {
  PinholeCamera camera;
  double camera_standoff = 100.0;  // mm below the rim plane
  BubbleConfig bubble;

  /// Pose of the camera in the bubble (end-effector) frame.
  RigidTransform camera_in_bubble() const { return RigidTransform::translation({0.0, 0.0, -camera_standoff}); }

  Vec3 camera_origin() const { return {0.0, 0.0, -camera_standoff}; }

  /// Ray depth t (camera z) at which a pixel ray meets the rest paraboloid.
  double rest_hit_depth(const Vec3& ray) const {
    const double h = bubble.inflation_height;
    const double R = bubble.rim_radius;
    const double a = h * (ray.x() * ray.x() + ray.y() * ray.y()) / (R * R);
    const double c = camera_standoff + h;
    if (a < 1e-15) return c;
    return (-1.0 + std::sqrt(1.0 + 4.0 * a * c)) / (2.0 * a);
  }

  /// Largest radius at which an image-corner ray meets the rest membrane.
  double rest_footprint_radius() const {
    double r = 0.0;
    for (double x : {0.0, static_cast<double>(camera.width)})
      for (double y : {0.0, static_cast<double>(camera.height)}) {
        const Vec3 ray = camera.ray(x, y);
        r = std::max(r, rest_hit_depth(ray) * std::hypot(ray.x(), ray.y()));
      }
    return r;
  }

  void validate() const {
    camera.validate();
    bubble.validate();
    if (!(camera_standoff > 0.0)) throw InvalidArgument("camera_standoff must be positive");
    const double r = rest_footprint_radius();
    if (r >= bubble.rim_radius) {
      throw InvalidArgument("camera field of view exceeds the membrane: footprint radius " + std::to_string(r) +
                            " mm >= rim radius " + std::to_string(bubble.rim_radius) + " mm");
    }
  }
};

}  // namespace softbubble::render
