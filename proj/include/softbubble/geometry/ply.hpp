#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/point_cloud.hpp"

namespace softbubble::geometry {

/// ASCII PLY with float x y z (mm) and, when `labels` is given, an int label
/// per vertex.
inline void write_ply(std::ostream& out, const PointCloud& cloud,
                      const std::vector<int>* labels = nullptr) {
  if (labels && labels->size() != cloud.size()) throw InvalidArgument("label count does not match point count");
  out << "ply\nformat ascii 1.0\n";
  out << "comment frame " << (cloud.frame.empty() ? "unknown" : cloud.frame) << "\n";
  out << "comment units mm\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (labels) out << "property int label\n";
  out << "end_header\n";
  char buf[96];
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    std::snprintf(buf, sizeof buf, "%.4f %.4f %.4f", static_cast<float>(p.x()), static_cast<float>(p.y()),
                  static_cast<float>(p.z()));
    out << buf;
    if (labels) out << ' ' << (*labels)[i];
    out << '\n';
  }
}

inline void write_ply(const std::string& path, const PointCloud& cloud, const std::vector<int>* labels = nullptr) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_ply(out, cloud, labels);
}

struct PlyData {
  PointCloud cloud;
  std::vector<int> labels;  // empty unless the file has a label property
};

/// Reads the ASCII PLY variant produced by write_ply (x y z [label]).
inline PlyData read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw IoError("not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  PlyData data;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw IoError("only ASCII PLY is supported");
    } else if (tag == "comment") {
      std::string key, value;
      ls >> key >> value;
      if (key == "frame") data.cloud.frame = value;
    } else if (tag == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw IoError("unexpected PLY element: " + name);
    } else if (tag == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (tag == "end_header") {
      break;
    }
  }
  if (props.size() < 3 || props[0] != "x" || props[1] != "y" || props[2] != "z")
    throw IoError("PLY must start with x y z properties");
  const bool has_label = props.size() > 3 && props[3] == "label";
  data.cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) throw IoError("truncated PLY vertex list");
    data.cloud.points.emplace_back(x, y, z);
    for (std::size_t k = 3; k < props.size(); ++k) {
      double extra;
      if (!(in >> extra)) throw IoError("truncated PLY vertex list");
      if (k == 3 && has_label) data.labels.push_back(static_cast<int>(extra));
    }
  }
  return data;
}

}  // namespace softbubble::geometry
