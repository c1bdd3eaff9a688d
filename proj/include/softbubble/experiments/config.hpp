#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>

#include "toml.hpp"

#include "softbubble/classify/dataset.hpp"
#include "softbubble/error.hpp"
#include "softbubble/experiments/press.hpp"
#include "softbubble/pose/tracker.hpp"

namespace softbubble::experiments {

struct ClassifierSettings {
  std::string kind = "descriptor";  // "descriptor" or "whole_image"
  int feature_side = 28;
  double ridge = 0.01;
  int min_resolution = 0;
  int max_resolution = 5;
};

struct DatasetSettings {
  std::string library = "six_object";
  int train_per_class = 200;
  int val_per_class = 50;
};

struct PoseSettings {
  std::string object = "frustum";
  int presses = 10;
  int inits = 12;
  double press_depth = 20.0;
  int frames_per_press = 5;
  double model_spacing = 1.5;  // mm
};

struct TrackSettings {
  std::string object = "prism";
  int frames = 14;
  double deg_per_frame = 5.0;
  int dropout_frame = 6;  // -1 disables
};

struct SortSettings {
  std::string library = "six_object";
  int repeats = 1;
  double press_depth = 20.0;
  double push_depth = 20.0;
  double min_push_contact = 5.0;
};

/// Everything a command needs, loaded from TOML with defaults for missing
/// keys. Unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  render::SensorRig rig;
  render::NoiseModel noise;
  touch::TouchConfig touch;
  membrane::PsorOptions solver;
  classify::GenerationConfig generation;  // rig/noise/touch/solver are copied in by sync()
  pose::TrackerConfig tracker;
  int reference_frames = 32;
  double aperture_deg = 15.0;
  double contact_band = 1.0;
  int contact_smoothing = 2;
  ClassifierSettings classifier;
  DatasetSettings dataset;
  PoseSettings pose;
  TrackSettings track;
  SortSettings sort;

  /// Propagates the shared sensor settings into the nested configs.
  void sync() {
    generation.rig = rig;
    generation.noise = noise;
    generation.touch = touch;
    generation.solver = solver;
    generation.reference_frames = reference_frames;
  }

  PressSettings press_settings() const { return {rig, noise, touch, solver, aperture_deg, contact_band, contact_smoothing}; }

  void validate() const {
    rig.validate();
    noise.validate();
    touch.validate();
    tracker.params.icp.validate();
    if (!(tracker.target_rate_hz >= 1.0 && tracker.target_rate_hz <= 2.0))
      throw InvalidArgument("tracking.target_rate_hz must lie in [1, 2]");
    if (classifier.kind != "descriptor" && classifier.kind != "whole_image")
      throw InvalidArgument("classifier.kind must be 'descriptor' or 'whole_image'");
    if (classifier.min_resolution < 0 || classifier.max_resolution > 5 ||
        classifier.min_resolution > classifier.max_resolution)
      throw InvalidArgument("classifier resolution range must lie within 0..5");
    if (dataset.train_per_class < 1 || dataset.val_per_class < 1)
      throw InvalidArgument("dataset counts must be >= 1");
    if (pose.inits < 1 || pose.inits > pose::kMaxInits) throw InvalidArgument("pose.inits must lie in 1..12");
    if (!(pose.press_depth >= 0.0 && pose.press_depth <= 40.0)) throw InvalidArgument("pose.press_depth must lie in [0, 40]");
    if (!(aperture_deg > 0.0 && aperture_deg < 180.0)) throw InvalidArgument("aperture_deg must lie in (0, 180)");
    if (!(contact_band > 0.0)) throw InvalidArgument("contact_band must be positive");
    if (contact_smoothing < 0) throw InvalidArgument("contact_smoothing must be >= 0");
    if (reference_frames < 1) throw InvalidArgument("reference_frames must be >= 1");
  }
};

namespace detail {

inline void check_keys(const toml::table& t, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : t) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key.str() == a;
    if (!ok) throw InvalidArgument("unknown config key '" + std::string(where) + std::string(key.str()) + "'");
  }
}

template <class T>
void read(const toml::table& t, std::string_view key, T& out, std::string_view where) {
  const toml::node* node = t.get(key);
  if (!node) return;
  if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) return void(out = *v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) return void(out = *v);
  } else if constexpr (std::is_integral_v<T>) {
    if (node->is_integer()) {
      const auto v = node->value<std::int64_t>().value();
      if (std::is_unsigned_v<T> && v < 0)
        throw InvalidArgument("config key '" + std::string(where) + std::string(key) + "' must be non-negative");
      return void(out = static_cast<T>(v));
    }
  } else {
    if (node->is_number()) return void(out = node->value<double>().value());
  }
  throw InvalidArgument("config key '" + std::string(where) + std::string(key) + "' has the wrong type");
}

inline const toml::table* section(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (!node) return nullptr;
  if (!node->is_table()) throw InvalidArgument("config key '" + std::string(name) + "' must be a table");
  return node->as_table();
}

}  // namespace detail

inline RunConfig parse_run_config(const toml::table& root) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  check_keys(root, "", {"seed", "camera", "bubble", "noise", "touch", "solver", "icp", "tracking", "classifier",
                        "dataset", "pose", "track", "sort", "reference_frames", "aperture_deg", "contact_band",
                        "contact_smoothing"});
  read(root, "seed", c.seed, "");
  read(root, "reference_frames", c.reference_frames, "");
  read(root, "aperture_deg", c.aperture_deg, "");
  read(root, "contact_band", c.contact_band, "");
  read(root, "contact_smoothing", c.contact_smoothing, "");
  if (const auto* t = detail::section(root, "camera")) {
    check_keys(*t, "camera.", {"width", "height", "hfov_deg", "vfov_deg", "min_range", "max_range", "standoff"});
    read(*t, "width", c.rig.camera.width, "camera.");
    read(*t, "height", c.rig.camera.height, "camera.");
    read(*t, "hfov_deg", c.rig.camera.hfov_deg, "camera.");
    read(*t, "vfov_deg", c.rig.camera.vfov_deg, "camera.");
    read(*t, "min_range", c.rig.camera.min_range, "camera.");
    read(*t, "max_range", c.rig.camera.max_range, "camera.");
    read(*t, "standoff", c.rig.camera_standoff, "camera.");
  }
  if (const auto* t = detail::section(root, "bubble")) {
    check_keys(*t, "bubble.", {"rim_radius", "inflation_height", "pressure", "grid_spacing"});
    read(*t, "rim_radius", c.rig.bubble.rim_radius, "bubble.");
    read(*t, "inflation_height", c.rig.bubble.inflation_height, "bubble.");
    read(*t, "pressure", c.rig.bubble.pressure, "bubble.");
    read(*t, "grid_spacing", c.rig.bubble.grid_spacing, "bubble.");
  }
  if (const auto* t = detail::section(root, "noise")) {
    check_keys(*t, "noise.", {"sigma_fraction", "dark_region", "glare"});
    read(*t, "sigma_fraction", c.noise.gaussian_sigma_fraction, "noise.");
    if (const auto* d = detail::section(*t, "dark_region")) {
      check_keys(*d, "noise.dark_region.", {"enabled", "emitter_offset", "bias_fraction"});
      read(*d, "enabled", c.noise.dark_region.enabled, "noise.dark_region.");
      read(*d, "emitter_offset", c.noise.dark_region.emitter_offset, "noise.dark_region.");
      read(*d, "bias_fraction", c.noise.dark_region.bias_fraction, "noise.dark_region.");
    }
    if (const auto* g = detail::section(*t, "glare")) {
      check_keys(*g, "noise.glare.", {"enabled", "incidence_threshold_deg", "dropout_probability"});
      read(*g, "enabled", c.noise.glare.enabled, "noise.glare.");
      read(*g, "incidence_threshold_deg", c.noise.glare.incidence_threshold_deg, "noise.glare.");
      read(*g, "dropout_probability", c.noise.glare.dropout_probability, "noise.glare.");
    }
  }
  if (const auto* t = detail::section(root, "touch")) {
    check_keys(*t, "touch.", {"deviation_threshold", "min_pixels", "median_filter"});
    read(*t, "deviation_threshold", c.touch.deviation_threshold, "touch.");
    read(*t, "min_pixels", c.touch.min_pixels, "touch.");
    read(*t, "median_filter", c.touch.median_filter, "touch.");
  }
  if (const auto* t = detail::section(root, "solver")) {
    check_keys(*t, "solver.", {"omega", "update_tol", "kkt_tol", "max_sweeps", "coarse_start"});
    read(*t, "omega", c.solver.omega, "solver.");
    read(*t, "update_tol", c.solver.update_tol, "solver.");
    read(*t, "kkt_tol", c.solver.kkt_tol, "solver.");
    read(*t, "max_sweeps", c.solver.max_sweeps, "solver.");
    read(*t, "coarse_start", c.solver.coarse_start, "solver.");
  }
  auto& icp = c.tracker.params.icp;
  if (const auto* t = detail::section(root, "icp")) {
    check_keys(*t, "icp.", {"max_iterations", "max_correspondence_distance", "rotation_tolerance",
                            "translation_tolerance", "min_inlier_fraction", "crop_fraction", "source_voxel"});
    read(*t, "max_iterations", icp.max_iterations, "icp.");
    read(*t, "max_correspondence_distance", icp.max_correspondence_distance, "icp.");
    read(*t, "rotation_tolerance", icp.rotation_tolerance, "icp.");
    read(*t, "translation_tolerance", icp.translation_tolerance, "icp.");
    read(*t, "min_inlier_fraction", icp.min_inlier_fraction, "icp.");
    read(*t, "crop_fraction", c.tracker.params.crop_fraction, "icp.");
    read(*t, "source_voxel", c.tracker.params.source_voxel, "icp.");
  }
  if (const auto* t = detail::section(root, "tracking")) {
    check_keys(*t, "tracking.", {"window_deg", "target_rate_hz"});
    read(*t, "window_deg", c.tracker.window_deg, "tracking.");
    read(*t, "target_rate_hz", c.tracker.target_rate_hz, "tracking.");
  }
  if (const auto* t = detail::section(root, "classifier")) {
    check_keys(*t, "classifier.", {"kind", "feature_side", "ridge", "min_resolution", "max_resolution"});
    read(*t, "kind", c.classifier.kind, "classifier.");
    read(*t, "feature_side", c.classifier.feature_side, "classifier.");
    read(*t, "ridge", c.classifier.ridge, "classifier.");
    read(*t, "min_resolution", c.classifier.min_resolution, "classifier.");
    read(*t, "max_resolution", c.classifier.max_resolution, "classifier.");
  }
  if (const auto* t = detail::section(root, "dataset")) {
    check_keys(*t, "dataset.", {"library", "train_per_class", "val_per_class", "max_offset", "min_press", "max_press",
                                "pressure_jitter", "max_retries"});
    read(*t, "library", c.dataset.library, "dataset.");
    read(*t, "train_per_class", c.dataset.train_per_class, "dataset.");
    read(*t, "val_per_class", c.dataset.val_per_class, "dataset.");
    read(*t, "max_offset", c.generation.max_offset, "dataset.");
    read(*t, "min_press", c.generation.min_press, "dataset.");
    read(*t, "max_press", c.generation.max_press, "dataset.");
    read(*t, "pressure_jitter", c.generation.pressure_jitter, "dataset.");
    read(*t, "max_retries", c.generation.max_retries, "dataset.");
  }
  if (const auto* t = detail::section(root, "pose")) {
    check_keys(*t, "pose.", {"object", "presses", "inits", "press_depth", "frames_per_press", "model_spacing"});
    read(*t, "object", c.pose.object, "pose.");
    read(*t, "presses", c.pose.presses, "pose.");
    read(*t, "inits", c.pose.inits, "pose.");
    read(*t, "press_depth", c.pose.press_depth, "pose.");
    read(*t, "frames_per_press", c.pose.frames_per_press, "pose.");
    read(*t, "model_spacing", c.pose.model_spacing, "pose.");
  }
  if (const auto* t = detail::section(root, "track")) {
    check_keys(*t, "track.", {"object", "frames", "deg_per_frame", "dropout_frame"});
    read(*t, "object", c.track.object, "track.");
    read(*t, "frames", c.track.frames, "track.");
    read(*t, "deg_per_frame", c.track.deg_per_frame, "track.");
    read(*t, "dropout_frame", c.track.dropout_frame, "track.");
  }
  if (const auto* t = detail::section(root, "sort")) {
    check_keys(*t, "sort.", {"library", "repeats", "press_depth", "push_depth", "min_push_contact"});
    read(*t, "library", c.sort.library, "sort.");
    read(*t, "repeats", c.sort.repeats, "sort.");
    read(*t, "press_depth", c.sort.press_depth, "sort.");
    read(*t, "push_depth", c.sort.push_depth, "sort.");
    read(*t, "min_push_contact", c.sort.min_push_contact, "sort.");
  }
  c.sync();
  c.validate();
  return c;
}

inline RunConfig parse_run_config(std::string_view text) {
  try {
    return parse_run_config(toml::parse(text));
  } catch (const toml::parse_error& e) {
    throw InvalidArgument(std::string("invalid TOML: ") + std::string(e.description()));
  }
}

inline RunConfig load_run_config(const std::string& path) {
  try {
    return parse_run_config(toml::parse_file(path));
  } catch (const toml::parse_error& e) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path);
    throw InvalidArgument("invalid TOML in " + path + ": " + std::string(e.description()));
  }
}

}  // namespace softbubble::experiments
