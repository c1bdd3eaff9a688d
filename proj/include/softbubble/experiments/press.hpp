#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "softbubble/classify/objects.hpp"
#include "softbubble/error.hpp"
#include "softbubble/geometry/frame_graph.hpp"
#include "softbubble/geometry/transform.hpp"
#include "softbubble/membrane/obstacle.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/random.hpp"
#include "softbubble/render/noise.hpp"
#include "softbubble/render/pgm.hpp"
#include "softbubble/render/render.hpp"
#include "softbubble/render/stream.hpp"
#include "softbubble/touch/touch.hpp"

namespace softbubble::experiments {

using geometry::Quat;
using geometry::RigidTransform;
using geometry::Vec3;

/// Unit vectors uniform over the spherical cap of full angle `aperture_deg`
/// around +z (maximum tilt aperture/2).
inline std::vector<Vec3> sample_cone_axes(int n, double aperture_deg, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("need at least one axis");
  if (!(aperture_deg > 0.0 && aperture_deg < 180.0)) throw InvalidArgument("cone aperture must lie in (0, 180)");
  const double cos_max = std::cos(geometry::deg2rad(0.5 * aperture_deg));
  Rng rng(seed);
  std::vector<Vec3> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double c = 1.0 - rng.uniform() * (1.0 - cos_max);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    out.emplace_back(s * std::cos(phi), s * std::sin(phi), c);
  }
  return out;
}

/// Mean tilt (rad) of axes uniform over a cap of half-angle `half_angle`.
inline double cone_mean_tilt(double half_angle) {
  return (std::sin(half_angle) - half_angle * std::cos(half_angle)) / (1.0 - std::cos(half_angle));
}

/// Object resting on the table with its contact face up, yawed about the
/// vertical. World z points up; the table is z = 0.
inline RigidTransform object_on_table(const classify::ObjectModel& obj, double x, double y, double yaw_rad) {
  const double height = obj.mesh.bounds().hi.z();
  return RigidTransform(Quat(Eigen::AngleAxisd(yaw_rad, Vec3::UnitZ())) *
                            Quat(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX())),
                        Vec3(x, y, height));
}

/// Bubble orientation in the world whose axis (+z, toward the object) runs
/// along -approach.
inline Quat bubble_orientation(const Vec3& approach) {
  return Quat::FromTwoVectors(-Vec3::UnitZ(), -approach.normalized()) *
         Quat(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()));
}

/// World, end-effector (bubble) and camera frames for one sensor placement.
inline geometry::FrameGraph sensor_frames(const render::SensorRig& rig, const RigidTransform& world_from_bubble) {
  geometry::FrameGraph g;
  g.add_frame(render::kBubbleFrame, geometry::kWorldFrame, world_from_bubble);
  g.add_frame(geometry::kCameraFrame, render::kBubbleFrame, rig.camera_in_bubble());
  return g;
}

struct PressScenario {
  classify::ObjectModel object;
  RigidTransform object_pose;  // object in world
  Vec3 approach = Vec3::UnitZ();
  double press_depth = 20.0;  // mm, <= 40
  int frames = 5;
  std::uint64_t seed = 0;

  void validate(double aperture_deg) const {
    if (!(press_depth >= 0.0 && press_depth <= 40.0)) throw InvalidArgument("press depth must lie in [0, 40] mm");
    if (frames < 1) throw InvalidArgument("a press needs at least one frame");
    const double tilt = std::acos(std::clamp(approach.normalized().z(), -1.0, 1.0));
    if (tilt > geometry::deg2rad(0.5 * aperture_deg) + 1e-9)
      throw InvalidArgument("approach axis lies outside the configured cone");
  }
};

struct PressFrame {
  double depth;                    // commanded press depth, mm
  RigidTransform world_from_bubble;
  geometry::DepthImage image;      // noisy, quantized
  touch::TouchResult touch;
};

struct PressResult {
  std::vector<PressFrame> frames;
  touch::ContactPatch final_patch;  // camera frame
  geometry::PointCloud final_patch_world;
  geometry::PointCloud final_core_world;  // contact_core of the final patch
  RigidTransform object_truth;  // object in world
};

struct PressSettings {
  render::SensorRig rig;
  render::NoiseModel noise;
  touch::TouchConfig touch;
  membrane::PsorOptions solver;
  double aperture_deg = 15.0;
  double contact_band = 1.0;   // mm, see touch::contact_core
  int contact_smoothing = 2;   // pixels
};

/// Bubble placement `depth` mm past first contact along the approach axis,
/// and the matching obstacle.
inline std::pair<RigidTransform, membrane::ObstacleField> place_bubble(const PressScenario& sc,
                                                                      const render::SensorRig& rig,
                                                                      double depth) {
  const Quat r_wb = bubble_orientation(sc.approach);
  // Start with the rim plane well clear of the object's contact face.
  const double standoff = rig.bubble.inflation_height + 15.0;
  const Vec3 face = sc.object_pose.translation();
  RigidTransform world_from_bubble(r_wb, face + sc.approach.normalized() * standoff);
  const RigidTransform bubble_from_object = world_from_bubble.inverse() * sc.object_pose;
  const membrane::ObstacleField probe = membrane::build_obstacle(sc.object.mesh, bubble_from_object, rig.bubble);
  const double shift = membrane::penetration(probe, rig.bubble) - depth;
  // Moving the object by `shift` along bubble z equals moving the bubble by -shift.
  world_from_bubble = world_from_bubble * RigidTransform::translation({0.0, 0.0, -shift});
  return {world_from_bubble, membrane::shifted(probe, shift)};
}

inline touch::ReferenceFrame noisy_reference(const PressSettings& s, std::uint64_t seed, int frames = 16) {
  const geometry::DepthImage clean = render::render_rest(s.rig);
  std::vector<geometry::DepthImage> shots;
  for (int k = 0; k < frames; ++k) {
    render::NoiseModel nm = s.noise;
    nm.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
    shots.push_back(render::apply_noise(clean, s.rig.camera, nm));
  }
  return {render::quantized(touch::capture_reference(shots).depth)};
}

/// Presses the bubble onto a resting object in equal depth steps.
inline PressResult run_press(const PressScenario& sc, const PressSettings& s, const touch::ReferenceFrame& ref) {
  sc.validate(s.aperture_deg);
  s.rig.validate();
  PressResult out;
  out.object_truth = sc.object_pose;
  for (int k = 1; k <= sc.frames; ++k) {
    const double depth = sc.press_depth * k / sc.frames;
    auto [world_from_bubble, obstacle] = place_bubble(sc, s.rig, depth);
    const membrane::HeightField hf = membrane::solve_membrane(s.rig.bubble, obstacle, s.solver);
    render::NoiseModel nm = s.noise;
    nm.seed = mix_seed(sc.seed, static_cast<std::uint64_t>(k));
    geometry::DepthImage img = render::quantized(render::apply_noise(render::render_depth(s.rig, hf), s.rig.camera, nm));
    const touch::TouchResult t = touch::is_touch(img, ref, s.touch);
    out.frames.push_back({depth, world_from_bubble, std::move(img), t});
  }
  const PressFrame& last = out.frames.back();
  out.final_patch = touch::extract_contact(last.image, ref, s.rig.camera, s.touch);
  const auto graph = sensor_frames(s.rig, last.world_from_bubble);
  const RigidTransform world_from_camera = graph.resolve(geometry::kWorldFrame, geometry::kCameraFrame);
  out.final_patch_world = out.final_patch.points.transformed(world_from_camera, geometry::kWorldFrame);
  out.final_core_world = touch::contact_core(out.final_patch, s.contact_band, s.contact_smoothing)
                             .points.transformed(world_from_camera, geometry::kWorldFrame);
  return out;
}

}  // namespace softbubble::experiments
