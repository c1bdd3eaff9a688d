#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "softbubble/error.hpp"
#include "softbubble/geometry/mesh.hpp"
#include "softbubble/membrane/obstacle.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/random.hpp"
#include "softbubble/render/noise.hpp"
#include "softbubble/render/pgm.hpp"
#include "softbubble/render/render.hpp"

namespace softbubble::render {

using geometry::TriangleMesh;

/// Membrane state and clean render for one object placement.
struct SceneFrame {
  membrane::ObstacleField obstacle;
  HeightField membrane;
  DepthImage clean;
};

/// Builds the obstacle for `mesh` posed in the bubble frame, solves the
/// membrane and renders it. An empty mesh yields the rest membrane.
inline SceneFrame simulate_scene(const SensorRig& rig, const TriangleMesh& mesh, const RigidTransform& pose,
                                 const membrane::PsorOptions& solver = {}) {
  membrane::ObstacleField obstacle =
      mesh.empty() ? membrane::ObstacleField(membrane::make_grid(rig.bubble))
                   : membrane::build_obstacle(mesh, pose, rig.bubble);
  HeightField hf = obstacle.empty() ? membrane::rest_shape(rig.bubble)
                                    : membrane::solve_membrane(rig.bubble, obstacle, solver);
  DepthImage clean = render_depth(rig, hf);
  return {std::move(obstacle), std::move(hf), std::move(clean)};
}

inline DepthImage render_rest(const SensorRig& rig) { return render_depth(rig, membrane::rest_shape(rig.bubble)); }

/// An object moving in the bubble frame, sampled at a fixed frame rate.
struct StreamScenario {
  TriangleMesh mesh;                                  // empty: no contact
  std::function<RigidTransform(double)> object_pose;  // time (s) -> pose in bubble frame
  int frames = 1;
  NoiseModel noise = NoiseModel::none();
  std::uint64_t seed = 0;
  membrane::PsorOptions solver;
};

struct StreamFrame {
  int index;
  double timestamp;  // s
  std::uint64_t seed;
  DepthImage depth;
};

inline constexpr double kMaxFrameRate = 45.0;

inline std::vector<StreamFrame> frame_stream(const SensorRig& rig, const StreamScenario& scenario, double rate_hz) {
  if (!(rate_hz > 0.0 && rate_hz <= kMaxFrameRate))
    throw InvalidArgument("frame rate must lie in (0, 45] Hz, got " + std::to_string(rate_hz));
  if (scenario.frames < 1) throw InvalidArgument("stream needs at least one frame");
  rig.validate();
  std::vector<StreamFrame> out;
  out.reserve(scenario.frames);
  for (int k = 0; k < scenario.frames; ++k) {
    const double t = k / rate_hz;
    const RigidTransform pose = scenario.object_pose ? scenario.object_pose(t) : RigidTransform::identity();
    SceneFrame scene = simulate_scene(rig, scenario.mesh, pose, scenario.solver);
    NoiseModel nm = scenario.noise;
    nm.seed = mix_seed(scenario.seed, static_cast<std::uint64_t>(k));
    out.push_back({k, t, nm.seed, apply_noise(scene.clean, rig.camera, nm)});
  }
  return out;
}

/// Writes frame_<index>.pgm files plus manifest.json into `dir`.
inline void write_stream(const std::filesystem::path& dir, const std::vector<StreamFrame>& frames) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["frames"] = nlohmann::json::array();
  for (const StreamFrame& f : frames) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.pgm", f.index);
    write_pgm((dir / name).string(), f.depth);
    manifest["frames"].push_back({{"index", f.index}, {"timestamp", f.timestamp}, {"file", name}, {"seed", f.seed}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write stream manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace softbubble::render
