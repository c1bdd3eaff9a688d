#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "softbubble/classify/classifier.hpp"
#include "softbubble/classify/dataset.hpp"
#include "softbubble/classify/degrade.hpp"
#include "softbubble/classify/objects.hpp"
#include "softbubble/error.hpp"
#include "softbubble/membrane/solver.hpp"
#include "softbubble/random.hpp"
#include "softbubble/render/noise.hpp"
#include "softbubble/render/pgm.hpp"
#include "softbubble/render/render.hpp"

namespace softbubble::experiments {

/// Axis-aligned square region on the table (mm).
struct Zone {
  double cx = 0.0, cy = 0.0;
  double half_size = 40.0;

  bool contains(double x, double y) const { return std::abs(x - cx) <= half_size && std::abs(y - cy) <= half_size; }
  bool overlaps(const Zone& o) const {
    return std::abs(cx - o.cx) < half_size + o.half_size && std::abs(cy - o.cy) < half_size + o.half_size;
  }
};

/// One zone per object class of the library, in a row 300 mm from the
/// start line.
inline std::vector<Zone> default_zones(const classify::ObjectLibrary& lib) {
  std::vector<Zone> zones;
  const int n = static_cast<int>(lib.objects.size());
  for (int c = 0; c < n; ++c) zones.push_back({120.0 * (c - 0.5 * (n - 1)), 300.0, 40.0});
  return zones;
}

struct SortItem {
  int label = 0;  // index into the library's objects
  double x = 0.0, y = 0.0;
  double yaw_deg = 0.0;
};

struct SortScenario {
  classify::ObjectLibrary library;
  std::vector<SortItem> items;
  std::vector<Zone> zones;  // indexed by object label
  double press_depth = 20.0;
  double push_depth = 20.0;       // contact depth held while sliding
  double min_push_contact = 5.0;  // object follows the end effector at or above this depth
  int resolution = 0;             // N applied to the classification frame
  std::uint64_t seed = 0;

  void validate() const {
    if (zones.size() < library.objects.size()) throw InvalidArgument("sort scenario needs one zone per class");
    for (std::size_t a = 0; a < zones.size(); ++a)
      for (std::size_t b = a + 1; b < zones.size(); ++b)
        if (zones[a].overlaps(zones[b])) throw InvalidArgument("sort zones must be pairwise disjoint");
    for (const SortItem& it : items)
      if (it.label < 0 || it.label >= static_cast<int>(library.objects.size()))
        throw InvalidArgument("sort item label out of range");
    classify::check_resolution_param(resolution);
  }
};

struct SortRow {
  int index = 0;
  int true_label = 0;
  int predicted_label = 0;
  std::string true_class, predicted_class;
  double final_x = 0.0, final_y = 0.0;
  bool in_correct_zone = false;
};

struct SortReport {
  std::vector<SortRow> rows;
  std::vector<geometry::DepthImage> frames;  // classification frames, pre-degradation

  double accuracy() const {
    if (rows.empty()) return 0.0;
    int ok = 0;
    for (const SortRow& r : rows) ok += r.in_correct_zone;
    return static_cast<double>(ok) / static_cast<double>(rows.size());
  }
};

/// Sensor-side frame of an axial press centred on the object, rendered
/// exactly like a dataset sample.
inline geometry::DepthImage sort_press_frame(const classify::ObjectModel& obj, const SortItem& item, double depth,
                                             const classify::GenerationConfig& cfg, std::uint64_t seed) {
  auto [pose, obstacle] =
      classify::place_object(obj.mesh, cfg.rig.bubble, geometry::deg2rad(item.yaw_deg), 0.0, 0.0, depth);
  const auto hf = membrane::solve_membrane(cfg.rig.bubble, obstacle, cfg.solver);
  render::NoiseModel nm = cfg.noise;
  nm.seed = seed;
  return render::quantized(render::apply_noise(render::render_depth(cfg.rig, hf), cfg.rig.camera, nm));
}

/// Approach, press, classify, push toward the predicted class's zone, retract.
/// The object slides rigidly with the end effector while the held contact
/// depth is at least `min_push_contact`; a "no touch" prediction or a shallow
/// push leaves it in place.
inline SortReport run_sort(const SortScenario& sc, const classify::ClassifierModel& classifier,
                           const classify::GenerationConfig& cfg = {}) {
  sc.validate();
  SortReport report;
  for (std::size_t k = 0; k < sc.items.size(); ++k) {
    const SortItem& item = sc.items[k];
    const classify::ObjectModel& obj = sc.library.objects[item.label];
    geometry::DepthImage frame =
        sort_press_frame(obj, item, sc.press_depth, cfg, mix_seed(sc.seed, static_cast<std::uint64_t>(k)));
    const int predicted = classify::argmax(classifier.predict(classify::degrade_resolution(frame, sc.resolution)));

    double x = item.x, y = item.y;
    const bool has_zone = predicted < static_cast<int>(sc.library.objects.size());
    if (has_zone && sc.push_depth >= sc.min_push_contact) {
      x = sc.zones[predicted].cx;
      y = sc.zones[predicted].cy;
    }
    SortRow row;
    row.index = static_cast<int>(k);
    row.true_label = item.label;
    row.predicted_label = predicted;
    row.true_class = obj.name;
    row.predicted_class = sc.library.class_names().at(predicted);
    row.final_x = x;
    row.final_y = y;
    row.in_correct_zone = sc.zones[item.label].contains(x, y);
    report.rows.push_back(row);
    report.frames.push_back(std::move(frame));
  }
  return report;
}

/// Every object of the library once, spaced along the start line with
/// seeded yaws.
inline std::vector<SortItem> library_items(const classify::ObjectLibrary& lib, int repeats, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SortItem> items;
  const int n = static_cast<int>(lib.objects.size());
  for (int r = 0; r < repeats; ++r)
    for (int c = 0; c < n; ++c) items.push_back({c, 100.0 * (c - 0.5 * (n - 1)), 0.0, rng.uniform(0.0, 360.0)});
  return items;
}

inline void write_sort_report(std::ostream& out, const SortReport& report) {
  out << "index,true_class,predicted_class,final_x_mm,final_y_mm,in_correct_zone\n";
  char buf[256];
  for (const SortRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%.3f,%.3f,%d\n", r.index, r.true_class.c_str(),
                  r.predicted_class.c_str(), r.final_x, r.final_y, r.in_correct_zone ? 1 : 0);
    out << buf;
  }
}

inline void write_sort_report(const std::string& path, const SortReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_sort_report(out, report);
}

}  // namespace softbubble::experiments
