#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "softbubble/experiments/press.hpp"
#include "softbubble/geometry/primitives.hpp"
#include "softbubble/pose/tracker.hpp"

namespace softbubble::experiments {

struct TrackingScenario {
  classify::ObjectModel object;
  int frames = 12;
  double yaw0_deg = 0.0;
  double deg_per_frame = 5.0;  // rotation about the contact normal
  double press_depth = 20.0;
  std::vector<int> dropout_frames;  // frames whose patch is withheld
  double model_spacing = 1.5;       // mm, surface sampling of the model
  std::uint64_t seed = 0;
};

struct TrackingFrame {
  int index = 0;
  double true_yaw_deg = 0.0;
  bool dropped = false;
  pose::PoseEstimate estimate;
  double rotation_error_deg = 0.0;  // symmetry-quotiented; NaN on failure
  double translation_error = 0.0;   // mm; NaN on failure
  double step_seconds = 0.0;        // tracker wall time only
};

/// A resting object turned about the vertical by a fixed step per frame while
/// the sensor holds an axial press; each frame's contact core feeds the
/// tracker.
inline std::vector<TrackingFrame> run_tracking(const TrackingScenario& sc, const PressSettings& s,
                                               const touch::ReferenceFrame& ref,
                                               const pose::TrackerConfig& cfg = {}) {
  const geometry::PointCloud model = geometry::sample_surface(sc.object.mesh, sc.model_spacing, sc.seed);
  const RigidTransform nominal = object_on_table(sc.object, 0.0, 0.0, geometry::deg2rad(sc.yaw0_deg));
  pose::PoseTracker tracker(model, Vec3(0.0, 0.0, -1.0), nominal.rotation(), cfg);
  std::vector<TrackingFrame> out;
  for (int k = 0; k < sc.frames; ++k) {
    TrackingFrame f;
    f.index = k;
    f.true_yaw_deg = sc.yaw0_deg + k * sc.deg_per_frame;
    f.dropped = std::find(sc.dropout_frames.begin(), sc.dropout_frames.end(), k) != sc.dropout_frames.end();
    PressScenario press{sc.object, object_on_table(sc.object, 0.0, 0.0, geometry::deg2rad(f.true_yaw_deg)),
                        Vec3::UnitZ(), sc.press_depth, 1, mix_seed(sc.seed, static_cast<std::uint64_t>(k))};
    geometry::PointCloud patch{{}, geometry::kWorldFrame};
    if (!f.dropped) patch = run_press(press, s, ref).final_core_world;
    const auto t0 = std::chrono::steady_clock::now();
    f.estimate = tracker.step(patch);
    f.step_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (f.estimate.success) {
      f.rotation_error_deg = geometry::rad2deg(pose::symmetric_rotation_error(
          f.estimate.pose.rotation(), press.object_pose.rotation(), Vec3::UnitZ(), sc.object.symmetry_order));
      f.translation_error = (f.estimate.pose.translation() - press.object_pose.translation()).norm();
    } else {
      f.rotation_error_deg = f.translation_error = std::nan("");
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace softbubble::experiments
