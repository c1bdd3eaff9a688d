#pragma once

#include <cctype>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/geometry/mesh.hpp"

namespace softbubble::geometry {

namespace detail {

inline void warn_degenerate(const TriangleMesh& mesh, const std::string& source) {
  if (mesh.dropped_degenerate() > 0) {
    std::clog << "warning: " << source << ": dropped " << mesh.dropped_degenerate()
              << " degenerate triangle(s)\n";
  }
}

inline int obj_index(const std::string& token, int vertex_count, int line_no) {
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (const std::exception&) {
    throw IoError("OBJ line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  if (idx > 0) return idx - 1;
  if (idx < 0) return vertex_count + idx;
  throw IoError("OBJ line " + std::to_string(line_no) + ": face index 0 is invalid");
}

}  // namespace detail

/// ASCII Wavefront OBJ: `v` and `f` records; polygons are fan triangulated.
inline TriangleMesh parse_obj(std::istream& in, const std::string& source = "<obj>") {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw IoError(source + ": bad vertex on line " + std::to_string(line_no));
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(detail::obj_index(tok, static_cast<int>(vertices.size()), line_no));
      if (poly.size() < 3) throw IoError(source + ": face with fewer than 3 vertices on line " + std::to_string(line_no));
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) triangles.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  TriangleMesh mesh(std::move(vertices), std::move(triangles));
  detail::warn_degenerate(mesh, source);
  return mesh;
}

/// ASCII STL (`solid ... facet ... vertex ... endsolid`).
inline TriangleMesh parse_stl(std::istream& in, const std::string& source = "<stl>") {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::string tok;
  if (!(in >> tok) || tok != "solid") throw IoError(source + ": not an ASCII STL file");
  std::vector<int> pending;
  while (in >> tok) {
    if (tok == "vertex") {
      double x, y, z;
      if (!(in >> x >> y >> z)) throw IoError(source + ": bad vertex record");
      pending.push_back(static_cast<int>(vertices.size()));
      vertices.emplace_back(x, y, z);
    } else if (tok == "endloop") {
      if (pending.size() != 3) throw IoError(source + ": facet loop must have 3 vertices");
      triangles.push_back({pending[0], pending[1], pending[2]});
      pending.clear();
    }
  }
  TriangleMesh mesh(std::move(vertices), std::move(triangles));
  detail::warn_degenerate(mesh, source);
  return mesh;
}

/// Loads by extension (.obj or .stl, case-insensitive).
inline TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file: " + path);
  std::string ext = path.size() >= 4 ? path.substr(path.size() - 4) : "";
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".obj") return parse_obj(in, path);
  if (ext == ".stl") return parse_stl(in, path);
  throw IoError("unsupported mesh format (expected .obj or .stl): " + path);
}

inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out.precision(9);
  for (const Vec3& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const Triangle& t : mesh.triangles()) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

}  // namespace softbubble::geometry
