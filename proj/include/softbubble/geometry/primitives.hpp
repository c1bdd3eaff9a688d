#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "softbubble/error.hpp"
#include "softbubble/geometry/mesh.hpp"
#include "softbubble/geometry/point_cloud.hpp"
#include "softbubble/random.hpp"

namespace softbubble::geometry {

using Vec2 = Eigen::Vector2d;
using Polygon = std::vector<Vec2>;

inline double signed_area(const Polygon& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

/// Ear-clipping triangulation of a simple polygon (either winding). Returned
/// triangles are counter-clockwise in the xy plane.
inline std::vector<Triangle> triangulate(const Polygon& poly) {
  const int n = static_cast<int>(poly.size());
  if (n < 3) throw InvalidArgument("polygon needs at least 3 vertices");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (signed_area(poly) < 0.0) std::reverse(idx.begin(), idx.end());

  auto cross = [&](int a, int b, int c) {
    const Vec2 u = poly[b] - poly[a];
    const Vec2 v = poly[c] - poly[a];
    return u.x() * v.y() - u.y() * v.x();
  };
  auto inside = [&](int p, int a, int b, int c) {
    return cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0;
  };

  std::vector<Triangle> tris;
  int guard = 0;
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    bool clipped = false;
    for (int k = 0; k < m; ++k) {
      const int a = idx[(k + m - 1) % m], b = idx[k], c = idx[(k + 1) % m];
      if (cross(a, b, c) <= 1e-12) continue;
      bool blocked = false;
      for (int other : idx) {
        if (other == a || other == b || other == c) continue;
        if (inside(other, a, b, c)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      tris.push_back({a, b, c});
      idx.erase(idx.begin() + k);
      clipped = true;
      break;
    }
    if (!clipped || ++guard > 4 * n) throw InvalidArgument("polygon is not simple");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

/// Closed solid lofted between two polygons with matching vertex counts, the
/// first at height z0 and the second at z1.
inline TriangleMesh loft(const Polygon& bottom, double z0, const Polygon& top, double z1) {
  if (bottom.size() != top.size()) throw InvalidArgument("loft polygons need equal vertex counts");
  Polygon b = bottom, t = top;
  if (signed_area(b) < 0.0) {
    std::reverse(b.begin(), b.end());
    std::reverse(t.begin(), t.end());
  }
  const int n = static_cast<int>(b.size());
  std::vector<Vec3> verts;
  for (const Vec2& p : b) verts.emplace_back(p.x(), p.y(), z0);
  for (const Vec2& p : t) verts.emplace_back(p.x(), p.y(), z1);
  std::vector<Triangle> tris;
  for (const Triangle& tr : triangulate(b)) tris.push_back({tr[0], tr[2], tr[1]});  // faces -z
  for (const Triangle& tr : triangulate(t)) tris.push_back({tr[0] + n, tr[1] + n, tr[2] + n});
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    tris.push_back({i, j, j + n});
    tris.push_back({i, j + n, i + n});
  }
  return TriangleMesh(std::move(verts), std::move(tris));
}

inline TriangleMesh extrude(const Polygon& poly, double z0, double z1) { return loft(poly, z0, poly, z1); }

inline Polygon rectangle(double sx, double sy) {
  return {{-sx / 2, -sy / 2}, {sx / 2, -sy / 2}, {sx / 2, sy / 2}, {-sx / 2, sy / 2}};
}

inline Polygon regular_polygon(int n, double circumradius, double phase = 0.0) {
  Polygon p;
  for (int k = 0; k < n; ++k) {
    const double a = phase + 2.0 * std::numbers::pi * k / n;
    p.emplace_back(circumradius * std::cos(a), circumradius * std::sin(a));
  }
  return p;
}

/// Axis-aligned box with its -z face on z = 0, centered in xy.
inline TriangleMesh box(double sx, double sy, double sz) { return extrude(rectangle(sx, sy), 0.0, sz); }

/// Square block of side `side` whose lower face follows z = relief(x, y)
/// (relief >= 0) and whose top is flat at `height`. The lower face is sampled
/// on a (cells+1)^2 lattice.
inline TriangleMesh relief_block(double side, double height, int cells,
                                 const std::function<double(double, double)>& relief) {
  if (cells < 1) throw InvalidArgument("relief block needs at least one cell");
  const int n = cells + 1;
  auto at = [&](int i, int j) { return j * n + i; };
  std::vector<Vec3> verts;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = -side / 2 + side * i / cells;
      const double y = -side / 2 + side * j / cells;
      const double z = relief(x, y);
      if (!(z >= 0.0 && z < height)) throw InvalidArgument("relief must lie in [0, height)");
      verts.emplace_back(x, y, z);
    }
  std::vector<Triangle> tris;
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i) {
      tris.push_back({at(i, j), at(i, j + 1), at(i + 1, j + 1)});
      tris.push_back({at(i, j), at(i + 1, j + 1), at(i + 1, j)});
    }
  // Boundary ring of the lower face, counter-clockwise seen from +z.
  std::vector<int> ring;
  for (int i = 0; i < cells; ++i) ring.push_back(at(i, 0));
  for (int j = 0; j < cells; ++j) ring.push_back(at(cells, j));
  for (int i = cells; i > 0; --i) ring.push_back(at(i, cells));
  for (int j = cells; j > 0; --j) ring.push_back(at(0, j));
  const int top0 = static_cast<int>(verts.size());
  for (int r : ring) verts.emplace_back(verts[r].x(), verts[r].y(), height);
  const int m = static_cast<int>(ring.size());
  for (int k = 0; k < m; ++k) {
    const int k1 = (k + 1) % m;
    tris.push_back({ring[k], ring[k1], top0 + k1});
    tris.push_back({ring[k], top0 + k1, top0 + k});
  }
  const int c = static_cast<int>(verts.size());
  verts.emplace_back(0.0, 0.0, height);
  for (int k = 0; k < m; ++k) tris.push_back({top0 + k, top0 + (k + 1) % m, c});
  return TriangleMesh(std::move(verts), std::move(tris));
}

/// Latitude-longitude sphere centered at the origin.
inline TriangleMesh uv_sphere(double radius, int stacks = 24, int slices = 48) {
  if (stacks < 2 || slices < 3) throw InvalidArgument("sphere tessellation too coarse");
  std::vector<Vec3> verts;
  verts.emplace_back(0.0, 0.0, -radius);
  for (int i = 1; i < stacks; ++i) {
    const double th = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double ph = 2.0 * std::numbers::pi * j / slices;
      verts.emplace_back(radius * std::sin(th) * std::cos(ph), radius * std::sin(th) * std::sin(ph),
                         -radius * std::cos(th));
    }
  }
  const int north = static_cast<int>(verts.size());
  verts.emplace_back(0.0, 0.0, radius);
  auto ring = [&](int i, int j) { return 1 + (i - 1) * slices + (j % slices); };
  std::vector<Triangle> tris;
  for (int j = 0; j < slices; ++j) tris.push_back({0, ring(1, j + 1), ring(1, j)});
  for (int i = 1; i + 1 < stacks; ++i)
    for (int j = 0; j < slices; ++j) {
      tris.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)});
      tris.push_back({ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  for (int j = 0; j < slices; ++j) tris.push_back({ring(stacks - 1, j), ring(stacks - 1, j + 1), north});
  return TriangleMesh(std::move(verts), std::move(tris));
}

/// Area-weighted random surface samples, roughly one per `spacing`^2 mm^2.
inline PointCloud sample_surface(const TriangleMesh& mesh, double spacing, std::uint64_t seed,
                                 std::string frame = "Object") {
  if (!(spacing > 0.0)) throw InvalidArgument("sample spacing must be positive");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const Triangle& t : mesh.triangles()) {
    total += mesh.area(t);
    cumulative.push_back(total);
  }
  PointCloud cloud{{}, std::move(frame)};
  if (total <= 0.0) return cloud;
  const auto count = static_cast<std::size_t>(std::ceil(total / (spacing * spacing)));
  Rng rng(seed);
  cloud.points.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double pick = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t tri = std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
    double a = rng.uniform(), b = rng.uniform();
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3& p0 = mesh.corner(tri, 0);
    cloud.points.push_back(p0 + a * (mesh.corner(tri, 1) - p0) + b * (mesh.corner(tri, 2) - p0));
  }
  return cloud;
}

}  // namespace softbubble::geometry
