#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "softbubble/error.hpp"

namespace softbubble::membrane {

inline constexpr double kPsiToPa = 6894.757293168;

/// Physical identity of the sensor membrane.
///
/// The tension is calibrated so the pressure-loaded free membrane reaches the
/// configured inflation height at its apex: T = p R^2 / (4 h).
struct BubbleConfig {
  double rim_radius = 76.29;         // mm, back-derived from the 261.4 cm^2 dome area at 50 mm
  double inflation_height = 50.0;    // mm
  double pressure = 0.25 * kPsiToPa; // Pa (0.25 psi = 1723.7 Pa)
  double grid_spacing = 1.0;         // mm

  static constexpr double kMinHeight = 20.0;
  static constexpr double kMaxHeight = 75.0;

  void validate() const {
    if (!(rim_radius > 0.0)) throw InvalidArgument("rim_radius must be positive");
    if (!(inflation_height >= kMinHeight && inflation_height <= kMaxHeight))
      throw InvalidArgument("inflation_height must lie in [20, 75] mm, got " + std::to_string(inflation_height));
    if (!(pressure > 0.0)) throw InvalidArgument("pressure must be positive");
    if (!(grid_spacing > 0.0 && grid_spacing < rim_radius)) throw InvalidArgument("grid_spacing must lie in (0, rim_radius)");
  }

  /// Membrane tension in N/m.
  double tension() const {
    // p [Pa] * R^2 [mm^2] / h [mm] = 1e-3 N/m
    return pressure * rim_radius * rim_radius / (4.0 * inflation_height) * 1e-3;
  }

  /// Load ratio p / T in 1/mm: the (negative) Laplacian of the free membrane.
  double load_ratio() const { return pressure / (tension() * 1e3); }

  /// Height of the free membrane at radius r (mm): h (1 - r^2 / R^2).
  double rest_height(double r) const {
    if (r >= rim_radius) return 0.0;
    return inflation_height * (1.0 - (r * r) / (rim_radius * rim_radius));
  }

  /// Closed-form surface area of the rest paraboloid, mm^2.
  double rest_surface_area() const {
    const double k = 2.0 * inflation_height / (rim_radius * rim_radius);
    const double kr = k * rim_radius;
    return 2.0 * std::numbers::pi / (3.0 * k * k) * (std::pow(1.0 + kr * kr, 1.5) - 1.0);
  }
};

}  // namespace softbubble::membrane
