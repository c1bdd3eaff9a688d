#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include "softbubble/experiments/press.hpp"
#include "softbubble/geometry/primitives.hpp"
#include "softbubble/pose/estimate.hpp"
#include "softbubble/pose/tracker.hpp"

namespace softbubble::experiments {

struct PoseExperiment {
  classify::ObjectModel object;
  int presses = 10;
  int inits = 12;
  double press_depth = 20.0;
  int frames_per_press = 5;
  double model_spacing = 1.5;
  double max_offset = 5.0;  // mm, object placement jitter on the table
  std::uint64_t seed = 0;
};

struct PoseTrial {
  int index = 0;
  PressScenario scenario;
  std::size_t patch_points = 0;
  pose::PoseEstimate estimate;
  double translation_error = 0.0;   // mm
  double rotation_error_deg = 0.0;  // symmetry-quotiented
  double seconds = 0.0;             // estimate_pose wall time
};

/// Cone-sampled presses of one object at random yaws; each final contact
/// core is registered against the surface model.
inline std::vector<PoseTrial> run_pose_experiment(const PoseExperiment& ex, const PressSettings& s,
                                                  const touch::ReferenceFrame& ref,
                                                  const pose::PoseParams& params = {}) {
  if (ex.inits < 1 || ex.inits > pose::kMaxInits) throw InvalidArgument("number of initializations must lie in 1..12");
  if (ex.presses < 1) throw InvalidArgument("pose experiment needs at least one press");
  const geometry::PointCloud model = geometry::sample_surface(ex.object.mesh, ex.model_spacing, mix_seed(ex.seed, 1));
  const std::vector<Vec3> axes = sample_cone_axes(ex.presses, s.aperture_deg, mix_seed(ex.seed, 2));
  const Quat face(Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()));
  Rng rng(mix_seed(ex.seed, 3));
  std::vector<PoseTrial> trials;
  for (int t = 0; t < ex.presses; ++t) {
    PoseTrial trial;
    trial.index = t;
    const double yaw = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double x = rng.uniform(-ex.max_offset, ex.max_offset);
    const double y = rng.uniform(-ex.max_offset, ex.max_offset);
    trial.scenario = {ex.object, object_on_table(ex.object, x, y, yaw), axes[t], ex.press_depth,
                      ex.frames_per_press, mix_seed(ex.seed, 100 + static_cast<std::uint64_t>(t))};
    const PressResult r = run_press(trial.scenario, s, ref);
    trial.patch_points = r.final_core_world.size();
    if (!r.final_core_world.empty()) {
      const auto t0 = std::chrono::steady_clock::now();
      trial.estimate = pose::estimate_pose(r.final_core_world, model, Vec3(0.0, 0.0, -1.0), face, ex.inits, params);
      trial.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    const RigidTransform& truth = trial.scenario.object_pose;
    if (trial.estimate.success) {
      trial.translation_error = (trial.estimate.pose.translation() - truth.translation()).norm();
      trial.rotation_error_deg = geometry::rad2deg(pose::symmetric_rotation_error(
          trial.estimate.pose.rotation(), truth.rotation(), Vec3::UnitZ(), ex.object.symmetry_order));
    } else {
      trial.translation_error = trial.rotation_error_deg = std::nan("");
    }
    trials.push_back(trial);
  }
  return trials;
}

/// Log rows with simulated timestamps (one press per tracker period), so
/// the log is reproducible byte for byte.
inline std::vector<pose::PoseLogRow> pose_log(const std::vector<PoseTrial>& trials, double rate_hz = 1.0) {
  std::vector<pose::PoseLogRow> rows;
  for (const PoseTrial& t : trials) rows.push_back({t.index, t.index / rate_hz, t.estimate});
  return rows;
}

/// Median over the finite entries; NaN entries count as +inf.
inline double median_error(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  for (double& x : v)
    if (!std::isfinite(x)) x = std::numeric_limits<double>::infinity();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace softbubble::experiments

namespace softbubble::experiments {

struct PerturbationTrial {
  double applied_deg = 0.0, applied_mm = 0.0;
  double residual_deg = 0.0, residual_mm = 0.0;
  bool success = false;
};

/// Uniformly random rigid perturbation: rotation about a uniform axis by up
/// to `max_deg`, translation in a uniform direction by up to `max_mm`.
inline RigidTransform random_perturbation(Rng& rng, double max_deg, double max_mm) {
  auto unit = [&rng] {
    const double z = rng.uniform(-1.0, 1.0), phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(1.0 - z * z);
    return Vec3(s * std::cos(phi), s * std::sin(phi), z);
  };
  const Vec3 axis = unit();
  const double angle = geometry::deg2rad(rng.uniform(0.0, max_deg));
  const Vec3 t = rng.uniform(0.0, max_mm) * unit();
  return RigidTransform(Quat(Eigen::AngleAxisd(angle, axis)), t);
}

/// ICP from identity on a perturbed subsample (every third point) of the
/// cropped model, so the exact answer is the inverse perturbation. The
/// residual is the transform left after composing the estimate with the
/// applied perturbation.
inline std::vector<PerturbationTrial> icp_perturbation_trials(const classify::ObjectModel& obj, int trials,
                                                              double max_deg, double max_mm, std::uint64_t seed,
                                                              const pose::PoseParams& params = {}) {
  const Vec3 normal(0.0, 0.0, -1.0);
  const geometry::PointCloud target =
      pose::crop_model(geometry::sample_surface(obj.mesh, 1.5, mix_seed(seed, 1)), normal, params.crop_fraction);
  geometry::PointCloud source{{}, target.frame};
  for (std::size_t i = 0; i < target.size(); i += 3) source.points.push_back(target.points[i]);
  const pose::KdTree tree(target.points);
  Rng rng(mix_seed(seed, 3));
  std::vector<PerturbationTrial> out;
  for (int k = 0; k < trials; ++k) {
    const RigidTransform p = random_perturbation(rng, max_deg, max_mm);
    const pose::IcpResult r = pose::icp(source.transformed(p, source.frame), tree, RigidTransform{}, params.icp);
    const RigidTransform residual = r.transform * p;
    out.push_back({geometry::rad2deg(p.angle()), p.translation().norm(), geometry::rad2deg(residual.angle()),
                   residual.translation().norm(), r.success});
  }
  return out;
}

}  // namespace softbubble::experiments
