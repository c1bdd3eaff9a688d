#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/mesh.hpp"
#include "softbubble/geometry/primitives.hpp"

namespace softbubble::classify {

using geometry::Polygon;
using geometry::TriangleMesh;

/// A rigid object in its own frame: the contact face lies on z = 0 (lowest
/// point), the body extends toward +z, and xy is centered on the face.
struct ObjectModel {
  std::string name;
  TriangleMesh mesh;
  int symmetry_order = 1;  // discrete rotations about z mapping the shape onto itself; 0 = continuous
};

inline constexpr const char* kNoTouchClass = "no_touch";

namespace shapes {

inline ObjectModel cube(double side = 40.0) { return {"cube", geometry::box(side, side, side), 4}; }

/// Square frustum: small face (contact) at z = 0, wide base at z = height.
inline ObjectModel frustum(double small_side = 20.0, double large_side = 40.0, double height = 40.0) {
  return {"frustum", geometry::loft(geometry::rectangle(small_side, small_side), 0.0,
                                    geometry::rectangle(large_side, large_side), height),
          4};
}

inline ObjectModel triangular_prism(double side = 40.0, double length = 40.0) {
  const double circum = side / std::sqrt(3.0);
  return {"prism", geometry::extrude(geometry::regular_polygon(3, circum, std::numbers::pi / 2), 0.0, length), 3};
}

inline ObjectModel cylinder(double diameter = 40.0, double height = 40.0, int segments = 64) {
  return {"cylinder", geometry::extrude(geometry::regular_polygon(segments, diameter / 2), 0.0, height), 0};
}

inline ObjectModel l_block(double side = 40.0, double notch = 20.0, double height = 40.0) {
  const double a = side / 2;
  const Polygon l = {{-a, -a}, {a, -a}, {a, -a + (side - notch)}, {-a + (side - notch), -a + (side - notch)},
                     {-a + (side - notch), a}, {-a, a}};
  return {"l_block", geometry::extrude(l, 0.0, height), 1};
}

/// Square block whose contact face is a shallow spherical dome.
inline ObjectModel sphere_cap_block(double side = 40.0, double height = 40.0, double sphere_radius = 40.0) {
  auto dome = [sphere_radius](double x, double y) {
    return sphere_radius - std::sqrt(sphere_radius * sphere_radius - x * x - y * y);
  };
  return {"sphere_cap", geometry::relief_block(side, height, 40, dome), 4};
}

inline ObjectModel wavy_cube(double side = 40.0, double amplitude = 3.0, double period = 10.0) {
  auto wave = [amplitude, period](double x, double) {
    return amplitude + amplitude * std::sin(2.0 * std::numbers::pi * x / period);
  };
  return {"wavy_cube", geometry::relief_block(side, side, 80, wave), 1};
}

/// Cube with its four vertical edges chamfered by `chamfer` mm legs.
inline ObjectModel chamfered_cube(double side = 40.0, double chamfer = 8.0) {
  const double a = side / 2;
  const double b = a - chamfer;
  const Polygon oct = {{-b, -a}, {b, -a}, {a, -b}, {a, b}, {b, a}, {-b, a}, {-a, b}, {-a, -b}};
  return {"chamfered_cube", geometry::extrude(oct, 0.0, side), 4};
}

}  // namespace shapes

/// Named object set. Class labels are object indices, followed by the
/// no-touch class as the last label.
struct ObjectLibrary {
  std::string name;
  std::vector<ObjectModel> objects;

  std::size_t num_classes() const { return objects.size() + 1; }
  int no_touch_label() const { return static_cast<int>(objects.size()); }

  std::vector<std::string> class_names() const {
    std::vector<std::string> names;
    for (const ObjectModel& o : objects) names.push_back(o.name);
    names.emplace_back(kNoTouchClass);
    return names;
  }
};

inline ObjectLibrary six_object_library() {
  return {"six_object",
          {shapes::cube(), shapes::frustum(), shapes::triangular_prism(), shapes::cylinder(), shapes::l_block(),
           shapes::sphere_cap_block()}};
}

inline ObjectLibrary three_cube_library() {
  return {"three_cube", {shapes::cube(), shapes::wavy_cube(), shapes::chamfered_cube()}};
}

inline ObjectLibrary library_by_name(const std::string& name) {
  if (name == "six_object") return six_object_library();
  if (name == "three_cube") return three_cube_library();
  throw InvalidArgument("unknown object library '" + name + "' (expected six_object or three_cube)");
}

inline ObjectModel object_by_name(const std::string& name) {
  for (const ObjectLibrary& lib : {six_object_library(), three_cube_library()})
    for (const ObjectModel& o : lib.objects)
      if (o.name == name) return o;
  throw InvalidArgument("unknown object '" + name + "'");
}

}  // namespace softbubble::classify
