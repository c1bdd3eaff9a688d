#pragma once

#include <optional>
#include <vector>

#include "softbubble/geometry/mesh.hpp"
#include "softbubble/geometry/primitives.hpp"
#include "softbubble/membrane/export.hpp"
#include "softbubble/membrane/obstacle.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/render/render.hpp"
#include "softbubble/render/stream.hpp"
#include "softbubble/touch/touch.hpp"

namespace softbubble::touch {

struct TwoSphereScene {
  double radius = 15.0;       // mm
  double gap = 20.0;          // mm between sphere surfaces
  double press_depth = 15.0;  // mm below the rest membrane
};

struct BridgingResult {
  double gap;
  int naive_components;     // from deviating depth pixels
  int membrane_components;  // from the solver's contact set
};

/// Two equal spheres side by side along x, pressed together into the bubble.
inline BridgingResult evaluate_bridging(const render::SensorRig& rig, const TwoSphereScene& scene,
                                        const TouchConfig& cfg = {}, const membrane::PsorOptions& solver = {}) {
  const double cx = scene.radius + 0.5 * scene.gap;
  const geometry::TriangleMesh sphere = geometry::uv_sphere(scene.radius, 32, 64);
  const double lift = rig.bubble.inflation_height + scene.radius + 10.0;
  membrane::ObstacleField a =
      membrane::build_obstacle(sphere, geometry::RigidTransform::translation({-cx, 0.0, lift}), rig.bubble);
  membrane::ObstacleField b =
      membrane::build_obstacle(sphere, geometry::RigidTransform::translation({cx, 0.0, lift}), rig.bubble);
  membrane::ObstacleField both = membrane::combine(a, b);
  both = membrane::shifted(both, membrane::penetration(both, rig.bubble) - scene.press_depth);

  const membrane::HeightField hf = membrane::solve_membrane(rig.bubble, both, solver);
  const ReferenceFrame ref{render::render_rest(rig)};
  const ContactPatch patch = extract_contact(render::render_depth(rig, hf), ref, rig.camera, cfg);
  const int membrane_parts = membrane::count_components(*hf.grid, hf.contact);
  return {scene.gap, patch.components, membrane_parts};
}

struct BridgingSweep {
  std::vector<BridgingResult> rows;
  std::optional<double> critical_gap;  // smallest gap beyond which both paths agree
};

/// Evaluates gaps in [gap_min, gap_max] with the given step. The critical gap
/// is the first sampled gap from which naive extraction separates the
/// contacts for every larger sampled gap.
inline BridgingSweep bridging_sweep(const render::SensorRig& rig, TwoSphereScene scene, double gap_min,
                                    double gap_max, double step, const TouchConfig& cfg = {},
                                    const membrane::PsorOptions& solver = {}) {
  if (!(step > 0.0) || gap_max < gap_min || gap_min < 0.0) throw InvalidArgument("invalid bridging sweep range");
  BridgingSweep sweep;
  for (int k = 0;; ++k) {
    scene.gap = gap_min + k * step;
    if (scene.gap > gap_max + 1e-9) break;
    sweep.rows.push_back(evaluate_bridging(rig, scene, cfg, solver));
  }
  for (std::size_t k = sweep.rows.size(); k-- > 0;) {
    const BridgingResult& r = sweep.rows[k];
    if (r.naive_components < r.membrane_components || r.naive_components < 2) break;
    sweep.critical_gap = r.gap;
  }
  return sweep;
}

}  // namespace softbubble::touch
