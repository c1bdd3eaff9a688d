#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "softbubble/classify/objects.hpp"
#include "softbubble/error.hpp"
#include "softbubble/membrane/obstacle.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/random.hpp"
#include "softbubble/render/noise.hpp"
#include "softbubble/render/pgm.hpp"
#include "softbubble/render/render.hpp"
#include "softbubble/render/stream.hpp"
#include "softbubble/touch/touch.hpp"

namespace softbubble::classify {

namespace fs = std::filesystem;
using geometry::RigidTransform;

enum class Split { Train, Val };

inline const char* split_name(Split s) { return s == Split::Train ? "train" : "val"; }

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  throw InvalidArgument("unknown split '" + s + "'");
}

struct SampleParams {
  double yaw_deg = 0.0;
  double offset_x = 0.0;  // mm, bubble frame
  double offset_y = 0.0;
  double press_depth = 0.0;  // mm; 0 for no-touch samples
  double pressure = 0.0;     // Pa
  std::uint64_t seed = 0;
  int attempts = 1;
};

struct DatasetEntry {
  std::string file;  // relative to the dataset directory
  int label = 0;
  std::string class_name;
  Split split = Split::Train;
  SampleParams params;
};

struct DatasetManifest {
  std::string dataset;
  std::uint64_t seed = 0;
  std::string reference;  // relative path of the reference depth frame
  std::vector<std::string> classes;
  std::vector<DatasetEntry> entries;

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const DatasetEntry& e : entries) n += e.split == s;
    return n;
  }
};

struct GenerationConfig {
  render::SensorRig rig;
  render::NoiseModel noise;
  touch::TouchConfig touch;
  membrane::PsorOptions solver;
  double max_offset = 20.0;                 // mm, per axis
  double min_press = 10.0, max_press = 40.0;  // mm
  double pressure_jitter = 0.2;             // relative
  int reference_frames = 32;
  int max_retries = 100;
};

/// Places `mesh` (object frame: contact face on z = 0) at a yaw and in-plane
/// offset in the bubble frame, pushed `depth` mm into the rest membrane.
/// Returns the pose of the object in the bubble frame and its obstacle.
inline std::pair<RigidTransform, membrane::ObstacleField> place_object(const TriangleMesh& mesh,
                                                                       const membrane::BubbleConfig& bubble,
                                                                       double yaw_rad, double ox, double oy,
                                                                       double depth) {
  const double lift = bubble.inflation_height + 10.0;
  RigidTransform pose = RigidTransform::translation({ox, oy, lift}) *
                        RigidTransform::axis_angle(geometry::Vec3::UnitZ(), yaw_rad);
  membrane::ObstacleField probe = membrane::build_obstacle(mesh, pose, bubble);
  const double dz = membrane::penetration(probe, bubble) - depth;
  if (!std::isfinite(dz)) throw InvalidArgument("object does not cover the membrane");
  pose = RigidTransform::translation({0.0, 0.0, dz}) * pose;
  return {pose, membrane::shifted(probe, dz)};
}

namespace detail {

inline nlohmann::json entry_to_json(const DatasetEntry& e) {
  return {{"file", e.file},
          {"label", e.label},
          {"class", e.class_name},
          {"split", split_name(e.split)},
          {"params",
           {{"yaw_deg", e.params.yaw_deg},
            {"offset_x_mm", e.params.offset_x},
            {"offset_y_mm", e.params.offset_y},
            {"press_depth_mm", e.params.press_depth},
            {"pressure_pa", e.params.pressure},
            {"seed", e.params.seed},
            {"attempts", e.params.attempts}}}};
}

}  // namespace detail

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
  nlohmann::json j;
  j["dataset"] = m.dataset;
  j["seed"] = m.seed;
  j["reference"] = m.reference;
  j["classes"] = m.classes;
  j["entries"] = nlohmann::json::array();
  for (const DatasetEntry& e : m.entries) j["entries"].push_back(detail::entry_to_json(e));
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << j.dump(2) << '\n';
}

inline DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    DatasetManifest m;
    m.dataset = j.at("dataset").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.reference = j.at("reference").get<std::string>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& je : j.at("entries")) {
      DatasetEntry e;
      e.file = je.at("file").get<std::string>();
      e.label = je.at("label").get<int>();
      e.class_name = je.at("class").get<std::string>();
      e.split = parse_split(je.at("split").get<std::string>());
      const auto& p = je.at("params");
      e.params.yaw_deg = p.at("yaw_deg").get<double>();
      e.params.offset_x = p.at("offset_x_mm").get<double>();
      e.params.offset_y = p.at("offset_y_mm").get<double>();
      e.params.press_depth = p.at("press_depth_mm").get<double>();
      e.params.pressure = p.at("pressure_pa").get<double>();
      e.params.seed = p.at("seed").get<std::uint64_t>();
      e.params.attempts = p.at("attempts").get<int>();
      if (e.label < 0 || e.label >= static_cast<int>(m.classes.size()))
        throw IoError("manifest entry " + e.file + " has an out-of-range label");
      m.entries.push_back(std::move(e));
    }
    return m;
  } catch (const nlohmann::json::exception& ex) {
    throw IoError("malformed manifest " + path.string() + ": " + ex.what());
  }
}

/// Simulates one labelled sample. Touch samples are redrawn until the
/// quantized frame passes is_touch.
inline std::pair<geometry::DepthImage, SampleParams> simulate_sample(const ObjectLibrary& lib, int label,
                                                                     const touch::ReferenceFrame& ref,
                                                                     const GenerationConfig& cfg,
                                                                     std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  SampleParams params;
  params.seed = sample_seed;
  render::NoiseModel noise = cfg.noise;
  if (label == lib.no_touch_label()) {
    params.pressure = cfg.rig.bubble.pressure;
    noise.seed = mix_seed(sample_seed, 0);
    auto img = render::quantized(render::apply_noise(render::render_rest(cfg.rig), cfg.rig.camera, noise));
    return {std::move(img), params};
  }
  const ObjectModel& obj = lib.objects.at(label);
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    params.yaw_deg = rng.uniform(0.0, 360.0);
    params.offset_x = rng.uniform(-cfg.max_offset, cfg.max_offset);
    params.offset_y = rng.uniform(-cfg.max_offset, cfg.max_offset);
    params.press_depth = rng.uniform(cfg.min_press, cfg.max_press);
    render::SensorRig rig = cfg.rig;
    rig.bubble.pressure *= rng.uniform(1.0 - cfg.pressure_jitter, 1.0 + cfg.pressure_jitter);
    params.pressure = rig.bubble.pressure;
    params.attempts = attempt + 1;
    auto [pose, obstacle] = place_object(obj.mesh, rig.bubble, geometry::deg2rad(params.yaw_deg),
                                         params.offset_x, params.offset_y, params.press_depth);
    const auto hf = membrane::solve_membrane(rig.bubble, obstacle, cfg.solver);
    noise.seed = mix_seed(sample_seed, static_cast<std::uint64_t>(attempt));
    auto img = render::quantized(render::apply_noise(render::render_depth(rig, hf), rig.camera, noise));
    if (touch::is_touch(img, ref, cfg.touch).touch) return {std::move(img), params};
  }
  throw Error("object '" + obj.name + "' failed touch detection after " + std::to_string(cfg.max_retries) +
              " retries");
}

/// Noisy rest frames averaged into the dataset's reference frame.
inline touch::ReferenceFrame dataset_reference(const GenerationConfig& cfg, std::uint64_t seed) {
  const geometry::DepthImage clean = render::render_rest(cfg.rig);
  std::vector<geometry::DepthImage> frames;
  for (int k = 0; k < std::max(1, cfg.reference_frames); ++k) {
    render::NoiseModel nm = cfg.noise;
    nm.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
    frames.push_back(render::apply_noise(clean, cfg.rig.camera, nm));
  }
  return {render::quantized(touch::capture_reference(frames).depth)};
}

struct PlannedSample {
  int label = 0;
  Split split = Split::Train;
  std::string file;  // <class>/<split>_<index>.pgm
  std::uint64_t seed = 0;
};

/// Sample layout of a dataset: class-major, train before val, one derived
/// seed per sample.
inline std::vector<PlannedSample> plan_dataset(const ObjectLibrary& lib, int per_class_train, int per_class_val,
                                               std::uint64_t seed) {
  if (per_class_train < 1 || per_class_val < 1) throw InvalidArgument("per-class sample counts must be >= 1");
  const std::vector<std::string> classes = lib.class_names();
  std::vector<PlannedSample> plan;
  plan.reserve(classes.size() * static_cast<std::size_t>(per_class_train + per_class_val));
  std::uint64_t stream = 0;
  for (int label = 0; label < static_cast<int>(classes.size()); ++label)
    for (Split split : {Split::Train, Split::Val}) {
      const int count = split == Split::Train ? per_class_train : per_class_val;
      for (int k = 0; k < count; ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%05d.pgm", split_name(split), k);
        plan.push_back({label, split, classes[label] + "/" + name, mix_seed(seed, ++stream)});
      }
    }
  return plan;
}

/// Generates and writes a labelled dataset under `dir`: one PGM per sample
/// in <class>/<split>_<index>.pgm, reference.pgm and manifest.json.
inline DatasetManifest generate_dataset(const ObjectLibrary& lib, int per_class_train, int per_class_val,
                                        std::uint64_t seed, const fs::path& dir,
                                        const GenerationConfig& cfg = {}) {
  const std::vector<PlannedSample> plan = plan_dataset(lib, per_class_train, per_class_val, seed);
  cfg.rig.validate();
  cfg.noise.validate();
  cfg.touch.validate();
  fs::create_directories(dir);

  DatasetManifest m;
  m.dataset = lib.name;
  m.seed = seed;
  m.classes = lib.class_names();
  m.reference = "reference.pgm";
  const touch::ReferenceFrame ref = dataset_reference(cfg, mix_seed(seed, 0x7265667265ULL));
  render::write_pgm((dir / m.reference).string(), ref.depth);

  for (const std::string& c : m.classes) fs::create_directories(dir / c);
  for (const PlannedSample& p : plan) {
    auto [img, params] = simulate_sample(lib, p.label, ref, cfg, p.seed);
    render::write_pgm((dir / p.file).string(), img);
    m.entries.push_back({p.file, p.label, m.classes[p.label], p.split, params});
  }
  write_manifest(dir / "manifest.json", m);
  return m;
}

}  // namespace softbubble::classify
