#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include "softbubble/error.hpp"
#include "softbubble/geometry/ply.hpp"
#include "softbubble/membrane/grid.hpp"

namespace softbubble::membrane {

/// One row per interior node: x_mm,y_mm,z_mm,contact.
inline void write_height_csv(std::ostream& out, const HeightField& hf) {
  out << "x_mm,y_mm,z_mm,contact\n";
  char buf[96];
  for (int node : hf.grid->interior_nodes()) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.6f,%d\n", hf.grid->x_of(node), hf.grid->y_of(node), hf.z[node],
                  hf.contact[node] ? 1 : 0);
    out << buf;
  }
}

inline void write_height_csv(const std::string& path, const HeightField& hf) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_height_csv(out, hf);
}

/// Interior node positions in the bubble frame.
inline geometry::PointCloud surface_samples(const HeightField& hf) {
  geometry::PointCloud cloud{{}, "Bubble"};
  cloud.points.reserve(hf.grid->interior_nodes().size());
  for (int node : hf.grid->interior_nodes())
    cloud.points.emplace_back(hf.grid->x_of(node), hf.grid->y_of(node), hf.z[node]);
  return cloud;
}

inline void write_height_ply(const std::string& path, const HeightField& hf) {
  std::vector<int> contact;
  for (int node : hf.grid->interior_nodes()) contact.push_back(hf.contact[node] ? 1 : 0);
  geometry::write_ply(path, surface_samples(hf), &contact);
}

/// Connected components (8-connectivity) of a node mask; labels are 1-based,
/// 0 marks unmasked nodes. Returns the component count.
inline int label_components(const DiskGrid& grid, const std::vector<std::uint8_t>& mask, std::vector<int>& labels) {
  labels.assign(grid.node_count(), 0);
  int count = 0;
  std::vector<int> stack;
  for (int node = 0; node < static_cast<int>(grid.node_count()); ++node) {
    if (!mask[node] || labels[node]) continue;
    ++count;
    labels[node] = count;
    stack.push_back(node);
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      grid.for_each_neighbor8(cur, [&](int nb) {
        if (mask[nb] && !labels[nb]) {
          labels[nb] = count;
          stack.push_back(nb);
        }
      });
    }
  }
  return count;
}

inline int count_components(const DiskGrid& grid, const std::vector<std::uint8_t>& mask) {
  std::vector<int> labels;
  return label_components(grid, mask, labels);
}

}  // namespace softbubble::membrane
