#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "softbubble/error.hpp"

namespace softbubble::membrane {

/// Cartesian node lattice x = i s, y = j s masked to the open rim disk.
///
/// Interior nodes carry a five-point stencil. Where an arm leaves the disk it
/// is shortened to end on the rim circle, which is where the pinned boundary
/// value z = 0 lives. The stencil is the stationarity condition of the
/// quadratic energy
///
///   E(z) = 1/2 sum_edges (s / len) (z_a - z_b)^2 - q sum_nodes A_i z_i,
///
/// with node weight A_i = s * (sum of the four arm lengths) / 4. That weight
/// makes the rest paraboloid an exact discrete solution.
class DiskGrid {
 public:
  struct Stencil {
    std::array<int, 4> neighbor;  // node index of each arm, -1 for the rim
    std::array<double, 4> weight; // s / arm length
    double diagonal;              // sum of weights
    double area;                  // A_i, mm^2
  };

  static std::shared_ptr<const DiskGrid> make(double radius, double spacing) {
    static std::mutex mutex;
    static std::map<std::pair<double, double>, std::shared_ptr<const DiskGrid>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{radius, spacing}];
    if (!slot) slot = std::shared_ptr<const DiskGrid>(new DiskGrid(radius, spacing));
    return slot;
  }

  double radius() const { return radius_; }
  double spacing() const { return spacing_; }
  int half() const { return half_; }
  int side() const { return side_; }
  std::size_t node_count() const { return static_cast<std::size_t>(side_) * side_; }

  int index(int i, int j) const { return (j + half_) * side_ + (i + half_); }
  bool in_lattice(int i, int j) const { return std::abs(i) <= half_ && std::abs(j) <= half_; }
  int lattice_i(int node) const { return node % side_ - half_; }
  int lattice_j(int node) const { return node / side_ - half_; }
  double x_of(int node) const { return lattice_i(node) * spacing_; }
  double y_of(int node) const { return lattice_j(node) * spacing_; }

  bool interior(int node) const { return interior_[node] != 0; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }
  /// Stencil of the k-th interior node (same order as interior_nodes()).
  const Stencil& stencil(std::size_t k) const { return stencils_[k]; }
  /// Position of `node` in interior_nodes(), or -1.
  int interior_rank(int node) const { return rank_[node]; }

  /// 8-connected neighbors of a node inside the lattice.
  template <typename F>
  void for_each_neighbor8(int node, F&& f) const {
    const int i = lattice_i(node);
    const int j = lattice_j(node);
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di)
        if ((di || dj) && in_lattice(i + di, j + dj)) f(index(i + di, j + dj));
  }

 private:
  DiskGrid(double radius, double spacing) : radius_(radius), spacing_(spacing) {
    if (!(radius > 0.0 && spacing > 0.0 && spacing < radius)) throw InvalidArgument("invalid disk grid parameters");
    half_ = static_cast<int>(std::ceil(radius / spacing)) + 1;
    side_ = 2 * half_ + 1;
    interior_.assign(node_count(), 0);
    rank_.assign(node_count(), -1);
    const double margin = 1e-3 * spacing;
    for (int j = -half_; j <= half_; ++j)
      for (int i = -half_; i <= half_; ++i) {
        const double r = std::hypot(i * spacing, j * spacing);
        if (radius - r > margin) {
          const int node = index(i, j);
          interior_[node] = 1;
          rank_[node] = static_cast<int>(interior_nodes_.size());
          interior_nodes_.push_back(node);
        }
      }
    stencils_.reserve(interior_nodes_.size());
    constexpr std::array<std::array<int, 2>, 4> dirs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (int node : interior_nodes_) {
      const int i = lattice_i(node);
      const int j = lattice_j(node);
      Stencil st{};
      double arm_sum = 0.0;
      for (int a = 0; a < 4; ++a) {
        const int ni = i + dirs[a][0];
        const int nj = j + dirs[a][1];
        double len = spacing;
        int nb = -1;
        if (interior_[index(ni, nj)]) {
          nb = index(ni, nj);
        } else {
          // Distance along the arm's axis from the node to the rim circle.
          const double along = dirs[a][0] != 0 ? i * spacing * dirs[a][0] : j * spacing * dirs[a][1];
          const double across = dirs[a][0] != 0 ? j * spacing : i * spacing;
          len = std::sqrt(std::max(0.0, radius * radius - across * across)) - along;
          len = std::clamp(len, margin, spacing);
        }
        st.neighbor[a] = nb;
        st.weight[a] = spacing / len;
        st.diagonal += st.weight[a];
        arm_sum += len;
      }
      st.area = spacing * arm_sum / 4.0;
      stencils_.push_back(st);
    }
  }

  double radius_;
  double spacing_;
  int half_ = 0;
  int side_ = 0;
  std::vector<std::uint8_t> interior_;
  std::vector<int> interior_nodes_;
  std::vector<int> rank_;
  std::vector<Stencil> stencils_;
};

using GridPtr = std::shared_ptr<const DiskGrid>;

/// Membrane height z(x, y) above the rim plane (mm) on a disk grid, with a
/// per-node contact flag. Nodes outside the open disk hold 0.
struct HeightField {
  GridPtr grid;
  std::vector<double> z;
  std::vector<std::uint8_t> contact;

  explicit HeightField(GridPtr g) : grid(std::move(g)), z(grid->node_count(), 0.0), contact(grid->node_count(), 0) {}

  double at(int i, int j) const { return grid->in_lattice(i, j) ? z[grid->index(i, j)] : 0.0; }

  double apex() const { return at(0, 0); }

  /// Bilinear interpolation; zero outside the lattice.
  double sample(double x, double y) const {
    const double s = grid->spacing();
    const double fx = x / s;
    const double fy = y / s;
    const int i0 = static_cast<int>(std::floor(fx));
    const int j0 = static_cast<int>(std::floor(fy));
    const double u = fx - i0;
    const double v = fy - j0;
    return (1 - u) * (1 - v) * at(i0, j0) + u * (1 - v) * at(i0 + 1, j0) + (1 - u) * v * at(i0, j0 + 1) +
           u * v * at(i0 + 1, j0 + 1);
  }

  std::size_t contact_count() const {
    std::size_t n = 0;
    for (auto c : contact) n += c;
    return n;
  }
};

/// Lowest object surface height above each node (mm); +inf where nothing overhangs.
struct ObstacleField {
  GridPtr grid;
  std::vector<double> phi;

  explicit ObstacleField(GridPtr g)
      : grid(std::move(g)), phi(grid->node_count(), std::numeric_limits<double>::infinity()) {}

  bool empty() const {
    for (int node : grid->interior_nodes())
      if (std::isfinite(phi[node])) return false;
    return true;
  }

  double min_height() const {
    double m = std::numeric_limits<double>::infinity();
    for (int node : grid->interior_nodes()) m = std::min(m, phi[node]);
    return m;
  }
};

}  // namespace softbubble::membrane
