// softbubble command line: simulation, dataset and perception experiments.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "softbubble/classify/evaluate.hpp"
#include "softbubble/experiments/config.hpp"
#include "softbubble/experiments/pose_experiment.hpp"
#include "softbubble/experiments/press.hpp"
#include "softbubble/experiments/sort.hpp"
#include "softbubble/experiments/track.hpp"
#include "softbubble/geometry/ply.hpp"
#include "softbubble/render/pgm.hpp"
#include "softbubble/render/stream.hpp"

namespace fs = std::filesystem;
using namespace softbubble;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config, "TOML run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "global seed (overrides the config)");
  auto* out = cmd->add_option("--out", c.out, "output path");
  if (out_required) out->required();
}

experiments::RunConfig load(const Common& c) {
  experiments::RunConfig cfg = c.config.empty() ? experiments::RunConfig{} : experiments::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.sync();
  return cfg;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

nlohmann::json pose_json(const geometry::RigidTransform& t) {
  const auto& q = t.rotation();
  const auto& p = t.translation();
  return {{"q_wxyz", {q.w(), q.x(), q.y(), q.z()}}, {"t_mm", {p.x(), p.y(), p.z()}}};
}

std::unique_ptr<classify::ClassifierModel> make_classifier(const experiments::RunConfig& cfg,
                                                           const geometry::DepthImage& reference) {
  if (cfg.classifier.kind == "whole_image")
    return std::make_unique<classify::NearestCentroid>(reference, cfg.classifier.feature_side);
  return std::make_unique<classify::DescriptorCentroid>(reference, cfg.rig, cfg.classifier.ridge);
}

classify::ClassifierFactory make_factory(const experiments::RunConfig& cfg) {
  if (cfg.classifier.kind == "whole_image") return classify::nearest_centroid_factory(cfg.classifier.feature_side);
  return classify::descriptor_centroid_factory(cfg.rig, cfg.classifier.ridge);
}

std::vector<int> resolution_range(const experiments::RunConfig& cfg) {
  std::vector<int> ns;
  for (int n = cfg.classifier.min_resolution; n <= cfg.classifier.max_resolution; ++n) ns.push_back(n);
  return ns;
}

// ---- rest ------------------------------------------------------------------

int cmd_rest(const Common& c, bool noisy) {
  const auto cfg = load(c);
  geometry::DepthImage img = render::render_rest(cfg.rig);
  if (noisy) {
    render::NoiseModel nm = cfg.noise;
    nm.seed = cfg.seed;
    img = render::apply_noise(img, cfg.rig.camera, nm);
  }
  ensure_parent(c.out);
  render::write_pgm(c.out, img);
  const int u = cfg.rig.camera.width / 2, v = cfg.rig.camera.height / 2;
  std::printf("wrote %s (%dx%d), center pixel %u\n", c.out.c_str(), img.width(), img.height(),
              render::quantize_depth(img.at(u, v)));
  return 0;
}

// ---- press -----------------------------------------------------------------

struct PressArgs {
  std::string object = "frustum";
  double depth = 20.0;
  int frames = 5;
  double tilt_deg = 0.0, azimuth_deg = 0.0, yaw_deg = 0.0;
};

int cmd_press(const Common& c, const PressArgs& a) {
  const auto cfg = load(c);
  const auto settings = cfg.press_settings();
  const double tilt = geometry::deg2rad(a.tilt_deg), az = geometry::deg2rad(a.azimuth_deg);
  const geometry::Vec3 approach(std::sin(tilt) * std::cos(az), std::sin(tilt) * std::sin(az), std::cos(tilt));
  const auto obj = classify::object_by_name(a.object);
  experiments::PressScenario sc{obj, experiments::object_on_table(obj, 0.0, 0.0, geometry::deg2rad(a.yaw_deg)),
                                approach, a.depth, a.frames, mix_seed(cfg.seed, 1)};
  const auto ref = experiments::noisy_reference(settings, mix_seed(cfg.seed, 2), cfg.reference_frames);
  const auto result = experiments::run_press(sc, settings, ref);

  const fs::path dir(c.out);
  fs::create_directories(dir);
  nlohmann::json log;
  log["object"] = obj.name;
  log["seed"] = cfg.seed;
  log["object_pose_world"] = pose_json(result.object_truth);
  log["frames"] = nlohmann::json::array();
  for (std::size_t k = 0; k < result.frames.size(); ++k) {
    const auto& f = result.frames[k];
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.pgm", k);
    render::write_pgm((dir / name).string(), f.image);
    log["frames"].push_back({{"file", name},
                             {"depth_mm", f.depth},
                             {"world_from_bubble", pose_json(f.world_from_bubble)},
                             {"touch", f.touch.touch},
                             {"deviating_pixels", f.touch.deviating_pixels}});
  }
  render::write_pgm((dir / "reference.pgm").string(), ref.depth);
  touch::write_patch_ply((dir / "patch_camera.ply").string(), result.final_patch);
  geometry::write_ply((dir / "patch_world.ply").string(), result.final_patch_world);
  geometry::write_ply((dir / "core_world.ply").string(), result.final_core_world);
  log["patch_points"] = result.final_patch.size();
  log["core_points"] = result.final_core_world.size();
  std::ofstream((dir / "press.json").string()) << log.dump(2) << '\n';
  std::printf("press %s to %.1f mm: final touch %d, %zu patch points, %zu core points\n", obj.name.c_str(),
              a.depth, result.frames.back().touch.touch ? 1 : 0, result.final_patch.size(),
              result.final_core_world.size());
  return 0;
}

// ---- dataset gen -------------------------------------------------------------

int cmd_dataset_gen(const Common& c, const std::string& library, int train, int val) {
  auto cfg = load(c);
  if (!library.empty()) cfg.dataset.library = library;
  if (train > 0) cfg.dataset.train_per_class = train;
  if (val > 0) cfg.dataset.val_per_class = val;
  cfg.validate();
  const auto lib = classify::library_by_name(cfg.dataset.library);
  const auto m = classify::generate_dataset(lib, cfg.dataset.train_per_class, cfg.dataset.val_per_class, cfg.seed,
                                            c.out, cfg.generation);
  std::printf("wrote %zu images + manifest to %s\n", m.entries.size(), c.out.c_str());
  return 0;
}

// ---- classify ----------------------------------------------------------------

int cmd_classify(const Common& c, const std::string& data, const std::string& kind, bool eval) {
  auto cfg = load(c);
  if (!kind.empty()) cfg.classifier.kind = kind;
  cfg.validate();
  const fs::path dir(data);
  const auto m = classify::read_manifest(dir / "manifest.json");
  std::vector<classify::AccuracyRow> rows;
  if (eval) {
    rows = classify::evaluate(m, dir, make_factory(cfg), resolution_range(cfg));
  } else {
    const auto reference = render::read_pgm((dir / m.reference).string());
    const int classes = static_cast<int>(m.classes.size());
    for (int n : resolution_range(cfg)) {
      auto model = make_classifier(cfg, classify::degrade_resolution(reference, n));
      classify::ManifestImageSource train(m, dir, classify::Split::Train, n);
      model->fit(train, classes);
      rows.push_back({m.dataset, n, "train", classify::macro_accuracy(*model, train, classes), train.size()});
    }
  }
  ensure_parent(c.out);
  classify::write_accuracy_csv(c.out, rows);
  classify::write_accuracy_csv(std::cout, rows);
  return 0;
}

// ---- pose estimate -----------------------------------------------------------

int cmd_pose(const Common& c, std::optional<int> inits, std::optional<int> presses, const std::string& object) {
  auto cfg = load(c);
  if (inits) cfg.pose.inits = *inits;
  if (presses) cfg.pose.presses = *presses;
  if (!object.empty()) cfg.pose.object = object;
  cfg.validate();
  const auto settings = cfg.press_settings();
  const auto ref = experiments::noisy_reference(settings, mix_seed(cfg.seed, 2), cfg.reference_frames);
  const experiments::PoseExperiment ex{classify::object_by_name(cfg.pose.object), cfg.pose.presses, cfg.pose.inits,
                                       cfg.pose.press_depth, cfg.pose.frames_per_press, cfg.pose.model_spacing,
                                       5.0, cfg.seed};
  const auto trials = experiments::run_pose_experiment(ex, settings, ref, cfg.tracker.params);
  ensure_parent(c.out);
  pose::write_pose_log(c.out, experiments::pose_log(trials, cfg.tracker.target_rate_hz));
  std::vector<double> te, re;
  double slowest = 0.0;
  for (const auto& t : trials) {
    te.push_back(t.translation_error);
    re.push_back(t.rotation_error_deg);
    slowest = std::max(slowest, t.seconds);
    std::printf("press %d: %zu core points, error %.2f mm / %.2f deg\n", t.index, t.patch_points,
                t.translation_error, t.rotation_error_deg);
  }
  std::printf("median error %.2f mm / %.2f deg, slowest estimate %.3f s\n", experiments::median_error(te),
              experiments::median_error(re), slowest);
  return 0;
}

// ---- track -------------------------------------------------------------------

int cmd_track(const Common& c) {
  const auto cfg = load(c);
  const auto settings = cfg.press_settings();
  const auto ref = experiments::noisy_reference(settings, mix_seed(cfg.seed, 2), cfg.reference_frames);
  experiments::TrackingScenario sc;
  sc.object = classify::object_by_name(cfg.track.object);
  sc.frames = cfg.track.frames;
  sc.deg_per_frame = cfg.track.deg_per_frame;
  if (cfg.track.dropout_frame >= 0) sc.dropout_frames = {cfg.track.dropout_frame};
  sc.model_spacing = cfg.pose.model_spacing;
  sc.seed = cfg.seed;
  const auto frames = experiments::run_tracking(sc, settings, ref, cfg.tracker);
  std::vector<pose::PoseLogRow> rows;
  for (const auto& f : frames) {
    rows.push_back({f.index, f.index / cfg.tracker.target_rate_hz, f.estimate});
    std::printf("frame %2d yaw %5.1f%s: error %.2f deg / %.2f mm\n", f.index, f.true_yaw_deg,
                f.dropped ? " (dropped)" : "", f.rotation_error_deg, f.translation_error);
  }
  ensure_parent(c.out);
  pose::write_pose_log(c.out, rows);
  return 0;
}

// ---- sort-demo ---------------------------------------------------------------

int cmd_sort(const Common& c, const std::string& data) {
  const auto cfg = load(c);
  const fs::path dir(data);
  const auto m = classify::read_manifest(dir / "manifest.json");
  const auto lib = classify::library_by_name(m.dataset);
  const auto reference = render::read_pgm((dir / m.reference).string());
  const int n = 0;
  auto model = make_classifier(cfg, classify::degrade_resolution(reference, n));
  model->fit(classify::ManifestImageSource(m, dir, classify::Split::Train, n), static_cast<int>(m.classes.size()));

  experiments::SortScenario sc;
  sc.library = lib;
  sc.items = experiments::library_items(lib, cfg.sort.repeats, mix_seed(cfg.seed, 5));
  sc.zones = experiments::default_zones(lib);
  sc.press_depth = cfg.sort.press_depth;
  sc.push_depth = cfg.sort.push_depth;
  sc.min_push_contact = cfg.sort.min_push_contact;
  sc.resolution = n;
  sc.seed = cfg.seed;
  const auto report = experiments::run_sort(sc, *model, cfg.generation);
  ensure_parent(c.out);
  experiments::write_sort_report(c.out, report);
  experiments::write_sort_report(std::cout, report);
  std::printf("sort accuracy %.3f\n", report.accuracy());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-bubble tactile sensor simulator and perception experiments"};
  app.require_subcommand(1);

  Common rest_c;
  bool rest_noisy = false;
  auto* rest = app.add_subcommand("rest", "render the rest membrane to a PGM");
  add_common(rest, rest_c);
  rest->add_flag("--noisy", rest_noisy, "apply the configured depth noise");

  Common press_c;
  PressArgs press_a;
  auto* press = app.add_subcommand("press", "press an object into the bubble; writes frames, clouds and a log");
  add_common(press, press_c);
  press->add_option("--object", press_a.object, "object name");
  press->add_option("--depth", press_a.depth, "press depth in mm (0..40)");
  press->add_option("--frames", press_a.frames, "frames per press");
  press->add_option("--tilt", press_a.tilt_deg, "approach tilt from vertical, deg");
  press->add_option("--azimuth", press_a.azimuth_deg, "approach tilt direction, deg");
  press->add_option("--yaw", press_a.yaw_deg, "object yaw on the table, deg");

  Common ds_c;
  std::string ds_library;
  int ds_train = 0, ds_val = 0;
  auto* dataset = app.add_subcommand("dataset", "labelled dataset tools");
  dataset->require_subcommand(1);
  auto* gen = dataset->add_subcommand("gen", "generate a labelled dataset directory");
  add_common(gen, ds_c);
  gen->add_option("--library", ds_library, "six_object or three_cube");
  gen->add_option("--train", ds_train, "training samples per class");
  gen->add_option("--val", ds_val, "validation samples per class");

  Common train_c, eval_c;
  std::string train_data, eval_data, train_kind, eval_kind;
  auto* classify_cmd = app.add_subcommand("classify", "baseline classifier");
  classify_cmd->require_subcommand(1);
  auto* train = classify_cmd->add_subcommand("train", "fit per N and report training accuracy (CSV)");
  add_common(train, train_c);
  train->add_option("--data", train_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--classifier", train_kind, "descriptor or whole_image");
  auto* eval = classify_cmd->add_subcommand("eval", "fit per N and report validation accuracy (CSV)");
  add_common(eval, eval_c);
  eval->add_option("--data", eval_data, "dataset directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--classifier", eval_kind, "descriptor or whole_image");

  Common pose_c;
  std::optional<int> pose_inits, pose_presses;
  std::string pose_object;
  auto* pose_cmd = app.add_subcommand("pose", "pose estimation");
  pose_cmd->require_subcommand(1);
  auto* estimate = pose_cmd->add_subcommand("estimate", "cone-sampled presses + ICP; writes a pose log CSV");
  add_common(estimate, pose_c);
  estimate->add_option("--inits", pose_inits, "initial orientations (1..12)");
  estimate->add_option("--presses", pose_presses, "number of presses");
  estimate->add_option("--object", pose_object, "object name");

  Common track_c;
  auto* track = app.add_subcommand("track", "track a rotating object; writes a pose log CSV");
  add_common(track, track_c);

  Common sort_c;
  std::string sort_data;
  auto* sort = app.add_subcommand("sort-demo", "press-classify-push sorting; writes a sort report CSV");
  add_common(sort, sort_c);
  sort->add_option("--data", sort_data, "dataset directory for training the classifier")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*rest) return cmd_rest(rest_c, rest_noisy);
    if (*press) return cmd_press(press_c, press_a);
    if (*gen) return cmd_dataset_gen(ds_c, ds_library, ds_train, ds_val);
    if (*train) return cmd_classify(train_c, train_data, train_kind, false);
    if (*eval) return cmd_classify(eval_c, eval_data, eval_kind, true);
    if (*estimate) return cmd_pose(pose_c, pose_inits, pose_presses, pose_object);
    if (*track) return cmd_track(track_c);
    if (*sort) return cmd_sort(sort_c, sort_data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
