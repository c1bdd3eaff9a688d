// Acceptance run: one PASS/FAIL line per criterion.
//
//   softbubble_acceptance [criteria...] [--workdir DIR]
//
// With no criteria every one of 1..10 runs. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "../unit/oracles.hpp"
#include "softbubble/classify/evaluate.hpp"
#include "softbubble/experiments/config.hpp"
#include "softbubble/experiments/pose_experiment.hpp"
#include "softbubble/experiments/press.hpp"
#include "softbubble/experiments/track.hpp"
#include "softbubble/membrane/obstacle.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/render/render.hpp"
#include "softbubble/touch/bridging.hpp"
#include "softbubble/touch/touch.hpp"

namespace fs = std::filesystem;
using namespace softbubble;
using geometry::Vec3;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Outcome::check(bool ok, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  if (!detail.empty()) detail += "; ";
  detail += buf;
  if (!ok) detail += " [fail]";
  pass = pass && ok;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

fs::path g_workdir;

// ---- 1 -------------------------------------------------------------------------

Outcome fov_footprint() {
  Outcome o;
  const double area = render::PinholeCamera{}.footprint_area(100.0) / 100.0;
  o.check(within(area, 99.5, 0.01), "footprint at 100 mm %.2f cm^2 (99.5 +/- 1%%)", area);
  return o;
}

// ---- 2 -------------------------------------------------------------------------

Outcome rest_geometry() {
  Outcome o;
  for (double h : {20.0, 50.0, 75.0}) {
    membrane::BubbleConfig cfg;
    cfg.inflation_height = h;
    const double apex = membrane::rest_shape(cfg).apex();
    o.check(within(apex, h, 0.01), "apex %.3f for h=%.0f", apex, h);
  }
  const render::SensorRig rig;
  const double surface = rig.bubble.rest_surface_area() / 100.0;
  o.check(within(surface, 261.4, 0.10), "surface %.1f cm^2 (261.4 +/- 10%%)", surface);
  const double fov = render::in_fov_membrane_area(rig, membrane::rest_shape(rig.bubble)) / 100.0;
  o.check(within(fov, 175.4, 0.10), "in-FOV %.1f cm^2 (175.4 +/- 10%%)", fov);
  return o;
}

// ---- 3 -------------------------------------------------------------------------

membrane::ObstacleField random_obstacle(const membrane::BubbleConfig& cfg, Rng& rng) {
  membrane::ObstacleField f(membrane::make_grid(cfg));
  struct Dent {
    double x, y, w, depth;
  };
  std::vector<Dent> dents;
  const int n = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
  for (int k = 0; k < n; ++k)
    dents.push_back({rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0), rng.uniform(8.0, 25.0),
                     rng.uniform(5.0, 30.0)});
  const double top = cfg.inflation_height + rng.uniform(-5.0, 5.0);
  for (int node : f.grid->interior_nodes()) {
    double v = top;
    for (const Dent& d : dents) {
      const double r2 = std::pow(f.grid->x_of(node) - d.x, 2) + std::pow(f.grid->y_of(node) - d.y, 2);
      v -= d.depth * std::exp(-r2 / (2.0 * d.w * d.w));
    }
    f.phi[node] = std::max(v, 5.0);
  }
  return f;
}

Outcome solver_correctness() {
  Outcome o;
  const membrane::BubbleConfig cfg;
  for (double depth : {5.0, 10.0, 20.0}) {
    const double plate = cfg.inflation_height - depth;
    const auto hf = membrane::solve_membrane(cfg, membrane::flat_obstacle(cfg, plate));
    const oracle::RadialPlate ref = oracle::radial_plate(cfg.rim_radius, cfg.inflation_height, plate);
    double se = 0.0, sdef = 0.0;
    for (int node : hf.grid->interior_nodes()) {
      const double r = std::hypot(hf.grid->x_of(node), hf.grid->y_of(node));
      se += std::pow(hf.z[node] - ref.height(r), 2);
      sdef += std::pow(cfg.rest_height(r) - ref.height(r), 2);
    }
    const double rel = std::sqrt(se / sdef);
    o.check(rel < 0.01, "plate %.0f mm rel RMS %.4f", depth, rel);
  }
  Rng rng(20240);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto f = random_obstacle(cfg, rng);
    worst = std::max(worst, membrane::kkt_report(membrane::solve_membrane(cfg, f), f, cfg).worst());
  }
  o.check(worst < 1e-3, "worst KKT residual over 50 fields %.2e", worst);
  return o;
}

// ---- 4 -------------------------------------------------------------------------

Outcome round_trip() {
  Outcome o;
  const render::SensorRig rig;
  const geometry::DepthImage img = render::render_rest(rig);
  const geometry::PointCloud cloud = geometry::deproject(img, rig.camera);
  double se = 0.0;
  for (const Vec3& p : cloud.points)
    se += std::pow(p.z() - rig.camera_standoff - rig.bubble.rest_height(std::hypot(p.x(), p.y())), 2);
  const double rms = std::sqrt(se / cloud.size());
  o.check(rms < 1.5, "round-trip RMS %.4f mm", rms);
  const double density = img.valid_count() / render::in_fov_membrane_area(rig, membrane::rest_shape(rig.bubble));
  o.check(within(density, 2.0, 0.25), "density %.2f px/mm^2", density);
  return o;
}

// ---- 5 -------------------------------------------------------------------------

Outcome touch_detection() {
  Outcome o;
  const render::SensorRig rig;
  const touch::TouchConfig tc;
  const geometry::DepthImage clean = render::render_rest(rig);
  std::vector<geometry::DepthImage> frames;
  for (int k = 0; k < 32; ++k) {
    render::NoiseModel nm;
    nm.seed = mix_seed(7, k);
    frames.push_back(render::apply_noise(clean, rig.camera, nm));
  }
  const touch::ReferenceFrame ref{render::quantized(touch::capture_reference(frames).depth)};
  int false_pos = 0;
  for (int k = 0; k < 1000; ++k) {
    render::NoiseModel nm;
    nm.seed = mix_seed(8, k);
    false_pos += touch::is_touch(render::quantized(render::apply_noise(clean, rig.camera, nm)), ref, tc).touch;
  }
  o.check(false_pos == 0, "%d false positives / 1000", false_pos);

  // Same placement distribution as dataset generation, without redraws.
  const classify::GenerationConfig gen;
  int presses = 0, detected = 0;
  std::string misses;
  std::vector<classify::ObjectModel> objects = classify::six_object_library().objects;
  for (const auto& obj : classify::three_cube_library().objects)
    if (std::none_of(objects.begin(), objects.end(), [&](const auto& o) { return o.name == obj.name; }))
      objects.push_back(obj);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const classify::ObjectModel& obj = objects[i];
    Rng rng(mix_seed(9, i));
    for (int k = 0; k < 25; ++k) {
      const double depth = k == 0 ? 10.0 : rng.uniform(10.0, 40.0);
      auto [pose, obstacle] = classify::place_object(obj.mesh, rig.bubble, rng.uniform(0.0, 2 * std::numbers::pi),
                                                     rng.uniform(-gen.max_offset, gen.max_offset),
                                                     rng.uniform(-gen.max_offset, gen.max_offset), depth);
      render::NoiseModel nm;
      nm.seed = rng.next_u64();
      const auto img = render::quantized(
          render::apply_noise(render::render_depth(rig, membrane::solve_membrane(rig.bubble, obstacle)), rig.camera, nm));
      ++presses;
      if (touch::is_touch(img, ref, tc).touch) {
        ++detected;
      } else {
        misses += " " + obj.name;
      }
    }
  }
  o.check(detected == presses, "detected %d / %d presses >= 10 mm%s", detected, presses, misses.c_str());
  return o;
}

// ---- 6 -------------------------------------------------------------------------

Outcome resolution_trend() {
  Outcome o;
  std::vector<std::vector<classify::AccuracyRow>> results;
  std::vector<double> chance;
  const classify::GenerationConfig gen;
  for (const auto& lib : {classify::six_object_library(), classify::three_cube_library()}) {
    const fs::path dir = g_workdir / ("criterion6_" + lib.name);
    const auto m = classify::generate_dataset(lib, 200, 50, 1, dir, gen);
    const auto rows = classify::evaluate(m, dir, classify::descriptor_centroid_factory(), {0, 1, 2, 3, 4, 5});
    classify::write_accuracy_csv((dir / "accuracy.csv").string(), rows);
    std::printf("  %s accuracy N=0..5:", lib.name.c_str());
    for (const auto& r : rows) std::printf(" %.3f", r.top1_accuracy);
    std::printf("\n");
    results.push_back(rows);
    chance.push_back(1.0 / m.classes.size());
  }
  const auto& six = results[0];
  const auto& cube = results[1];
  o.check(six[0].top1_accuracy >= 0.85, "(a) six-object N=0 %.3f >= 0.85", six[0].top1_accuracy);
  const double drop = cube[0].top1_accuracy - cube[2].top1_accuracy;
  o.check(drop >= 0.15, "(b) three-cube drop N=0->2 %.3f >= 0.15", drop);
  for (int n : {2, 3})
    o.check(six[n].top1_accuracy >= cube[n].top1_accuracy, "(c) N=%d six %.3f >= cube %.3f", n,
            six[n].top1_accuracy, cube[n].top1_accuracy);
  bool above = true;
  for (std::size_t d = 0; d < results.size(); ++d)
    for (const auto& r : results[d]) above = above && r.top1_accuracy >= chance[d];
  o.check(above, "(d) all accuracies >= chance");
  return o;
}

// ---- 7 -------------------------------------------------------------------------

Outcome pose_estimation() {
  Outcome o;
  const experiments::RunConfig cfg;
  const auto settings = cfg.press_settings();
  const auto ref = experiments::noisy_reference(settings, mix_seed(cfg.seed, 2), cfg.reference_frames);
  const experiments::PoseExperiment ex{classify::object_by_name("frustum"), 10, 12, 20.0, 5, 1.5, 5.0, cfg.seed};
  const auto trials = experiments::run_pose_experiment(ex, settings, ref, cfg.tracker.params);
  std::vector<double> te, re;
  double slowest = 0.0;
  for (const auto& t : trials) {
    te.push_back(t.translation_error);
    re.push_back(t.rotation_error_deg);
    slowest = std::max(slowest, t.seconds);
  }
  const double mt = experiments::median_error(te), mr = experiments::median_error(re);
  o.check(mt < 3.0, "median translation %.2f mm", mt);
  o.check(mr < 5.0, "median rotation %.2f deg", mr);
  o.check(slowest <= 0.5, "slowest estimate %.3f s", slowest);
  const auto pert = experiments::icp_perturbation_trials(classify::object_by_name("frustum"), 100, 10.0, 10.0, 3,
                                                         cfg.tracker.params);
  int ok = 0;
  for (const auto& p : pert) ok += p.success && p.residual_deg < 0.5 && p.residual_mm < 0.5;
  o.check(ok >= 95, "perturbations recovered %d / 100", ok);
  return o;
}

// ---- 8 -------------------------------------------------------------------------

Outcome tracking() {
  Outcome o;
  const experiments::RunConfig cfg;
  const auto settings = cfg.press_settings();
  const auto ref = experiments::noisy_reference(settings, mix_seed(cfg.seed, 2), cfg.reference_frames);
  experiments::TrackingScenario sc;
  sc.object = classify::object_by_name(cfg.track.object);
  sc.frames = cfg.track.frames;
  sc.deg_per_frame = cfg.track.deg_per_frame;
  sc.dropout_frames = {cfg.track.dropout_frame};
  sc.seed = cfg.seed;
  const auto frames = experiments::run_tracking(sc, settings, ref, cfg.tracker);
  double worst = 0.0, slowest = 0.0;
  bool all_ok = true;
  for (const auto& f : frames) {
    slowest = std::max(slowest, f.step_seconds);
    if (f.dropped) continue;
    all_ok = all_ok && f.estimate.success;
    worst = std::max(worst, f.estimate.success ? f.rotation_error_deg : 180.0);
  }
  o.check(slowest <= 1.0 / cfg.tracker.target_rate_hz, "slowest step %.3f s (rate >= %.0f Hz)", slowest,
          cfg.tracker.target_rate_hz);
  o.check(all_ok && worst < 3.0, "worst per-frame error %.2f deg over %zu frames", worst, frames.size());
  const auto& drop = frames.at(cfg.track.dropout_frame);
  const auto& next = frames.at(cfg.track.dropout_frame + 1);
  o.check(!drop.estimate.success && next.estimate.success && next.rotation_error_deg < 3.0,
          "dropout frame %d failed in-band, next frame %.2f deg", drop.index, next.rotation_error_deg);
  return o;
}

// ---- 9 -------------------------------------------------------------------------

Outcome bridging() {
  Outcome o;
  const render::SensorRig rig;
  const auto r = touch::evaluate_bridging(rig, touch::TwoSphereScene{});
  o.check(r.naive_components == 1 && r.membrane_components == 2, "gap %.0f mm: naive %d, membrane %d components",
          r.gap, r.naive_components, r.membrane_components);
  const auto sweep = touch::bridging_sweep(rig, touch::TwoSphereScene{}, 0.0, 100.0, 10.0);
  o.check(sweep.critical_gap.has_value(), "critical gap %.1f mm", sweep.critical_gap.value_or(std::nan("")));
  return o;
}

// ---- 10 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small end-to-end pipeline written under `dir`.
void pipeline(const fs::path& dir, std::uint64_t seed) {
  experiments::RunConfig cfg;
  cfg.seed = seed;
  cfg.sync();
  const auto lib = classify::three_cube_library();
  const auto m = classify::generate_dataset(lib, 6, 3, cfg.seed, dir / "data", cfg.generation);
  classify::write_accuracy_csv((dir / "accuracy.csv").string(),
                               classify::evaluate(m, dir / "data", classify::descriptor_centroid_factory(), {0, 2, 5}));
  const auto settings = cfg.press_settings();
  const auto ref = experiments::noisy_reference(settings, mix_seed(cfg.seed, 2), cfg.reference_frames);
  const experiments::PoseExperiment ex{classify::object_by_name("frustum"), 3, 12, 20.0, 2, 1.5, 5.0, cfg.seed};
  pose::write_pose_log((dir / "pose.csv").string(),
                       experiments::pose_log(experiments::run_pose_experiment(ex, settings, ref)));
  experiments::TrackingScenario sc;
  sc.object = classify::object_by_name("prism");
  sc.frames = 4;
  sc.dropout_frames = {2};
  sc.seed = cfg.seed;
  std::vector<pose::PoseLogRow> rows;
  for (const auto& f : experiments::run_tracking(sc, settings, ref)) rows.push_back({f.index, f.index * 1.0, f.estimate});
  pose::write_pose_log((dir / "track.csv").string(), rows);
}

Outcome determinism() {
  Outcome o;
  const fs::path a = g_workdir / "criterion10_a", b = g_workdir / "criterion10_b";
  fs::remove_all(a);
  fs::remove_all(b);
  pipeline(a, 11);
  pipeline(b, 11);
  int files = 0, same = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    same += slurp(e.path()) == slurp(b / fs::relative(e.path(), a));
  }
  o.check(files > 0 && same == files, "%d / %d files byte-identical (manifest, images, metrics, pose logs)", same,
          files);
  o.check(slurp(a / "data" / "manifest.json").size() > 0 && slurp(a / "pose.csv").size() > 0, "outputs nonempty");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  std::string workdir = (fs::temp_directory_path() / "softbubble_acceptance").string();
  app.add_option("criteria", selected, "criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--workdir", workdir, "scratch directory for generated data");
  CLI11_PARSE(app, argc, argv);
  g_workdir = workdir;
  fs::create_directories(g_workdir);

  const std::vector<Criterion> all = {
      {1, "FOV footprint", fov_footprint},
      {2, "membrane rest geometry", rest_geometry},
      {3, "obstacle solver correctness", solver_correctness},
      {4, "render/deproject round trip", round_trip},
      {5, "touch detection", touch_detection},
      {6, "resolution-degradation trend", resolution_trend},
      {7, "pose estimation", pose_estimation},
      {8, "tracking", tracking},
      {9, "bridging limitation", bridging},
      {10, "determinism", determinism},
  };
  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d (%s): %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.id, c.title, out.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed;
}
