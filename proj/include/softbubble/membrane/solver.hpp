#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "softbubble/error.hpp"
#include "softbubble/membrane/bubble_config.hpp"
#include "softbubble/membrane/grid.hpp"
#include "softbubble/membrane/obstacle.hpp"

namespace softbubble::membrane {

struct PsorOptions {
  double omega = 1.8;
  double update_tol = 1e-4;   // mm, max nodal update per sweep
  double kkt_tol = 5e-4;      // normalized residual (units of p) required in addition
  int max_sweeps = 50000;
  bool coarse_start = true;   // warm start from coarser lattices
  bool record_energy = false; // fills SolveStats::energy after every fine sweep
  double contact_tol = 1e-3;  // mm, sets HeightField::contact after the solve
};

struct SolveStats {
  int sweeps = 0;
  double last_update = 0.0;
  double kkt_residual = 0.0;
  std::vector<double> energy;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double last_update, double residual)
      : Error(what), last_update_(last_update), residual_(residual) {}
  double last_update() const { return last_update_; }
  double residual() const { return residual_; }

 private:
  double last_update_;
  double residual_;
};

/// Normalized membrane residual (-T lap z - p) / p at interior rank k.
/// Zero where the membrane is free; minus the contact pressure (in units of p)
/// where an object pushes on it.
inline double normalized_residual(const DiskGrid& grid, const std::vector<double>& z, double load, std::size_t k) {
  const auto& st = grid.stencil(k);
  double off = 0.0;
  for (int a = 0; a < 4; ++a)
    if (st.neighbor[a] >= 0) off += st.weight[a] * z[st.neighbor[a]];
  const double neg_lap = (st.diagonal * z[grid.interior_nodes()[k]] - off) / st.area;
  return neg_lap / load - 1.0;
}

/// Discrete energy 1/2 z'Kz - q A'z (mm^2, normalized by tension).
inline double membrane_energy(const DiskGrid& grid, const std::vector<double>& z, double load) {
  double e = 0.0;
  const auto& nodes = grid.interior_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& st = grid.stencil(k);
    double kz = st.diagonal * z[nodes[k]];
    for (int a = 0; a < 4; ++a)
      if (st.neighbor[a] >= 0) kz -= st.weight[a] * z[st.neighbor[a]];
    e += 0.5 * z[nodes[k]] * kz - load * st.area * z[nodes[k]];
  }
  return e;
}

struct KktReport {
  double max_free_residual = 0.0;   // max |r| over nodes strictly below the obstacle
  double max_negative_reaction = 0.0; // max(0, r) over all nodes: contact pulling the membrane
  double worst() const { return std::max(max_free_residual, max_negative_reaction); }
};

inline KktReport kkt_report(const HeightField& hf, const ObstacleField& obstacle, const BubbleConfig& cfg) {
  const DiskGrid& grid = *hf.grid;
  const double load = cfg.load_ratio();
  KktReport rep;
  const auto& nodes = grid.interior_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double r = normalized_residual(grid, hf.z, load, k);
    if (hf.z[nodes[k]] < obstacle.phi[nodes[k]]) rep.max_free_residual = std::max(rep.max_free_residual, std::abs(r));
    rep.max_negative_reaction = std::max(rep.max_negative_reaction, r);
  }
  return rep;
}

/// Free membrane: the paraboloid h (1 - r^2 / R^2), exact on the lattice.
inline HeightField rest_shape(const BubbleConfig& cfg) {
  HeightField hf(make_grid(cfg));
  for (int node : hf.grid->interior_nodes())
    hf.z[node] = cfg.rest_height(std::hypot(hf.grid->x_of(node), hf.grid->y_of(node)));
  return hf;
}

/// Nodes whose gap to the obstacle is at most `tol` mm.
inline std::vector<std::uint8_t> contact_mask(const HeightField& hf, const ObstacleField& obstacle, double tol) {
  if (hf.grid != obstacle.grid) throw InvalidArgument("height field and obstacle live on different grids");
  std::vector<std::uint8_t> mask(hf.grid->node_count(), 0);
  for (int node : hf.grid->interior_nodes())
    mask[node] = obstacle.phi[node] - hf.z[node] <= tol ? 1 : 0;
  return mask;
}

namespace detail {

inline double psor_sweep(const DiskGrid& grid, std::vector<double>& z, const std::vector<double>& phi, double load,
                         double omega) {
  const auto& nodes = grid.interior_nodes();
  double max_update = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& st = grid.stencil(k);
    double off = load * st.area;
    for (int a = 0; a < 4; ++a)
      if (st.neighbor[a] >= 0) off += st.weight[a] * z[st.neighbor[a]];
    const int node = nodes[k];
    const double old = z[node];
    double next = old + omega * (off / st.diagonal - old);
    next = std::min(next, phi[node]);
    max_update = std::max(max_update, std::abs(next - old));
    z[node] = next;
  }
  return max_update;
}

inline double max_kkt(const DiskGrid& grid, const std::vector<double>& z, const std::vector<double>& phi,
                      double load) {
  double worst = 0.0;
  const auto& nodes = grid.interior_nodes();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double r = normalized_residual(grid, z, load, k);
    worst = std::max(worst, z[nodes[k]] < phi[nodes[k]] ? std::abs(r) : std::max(0.0, r));
  }
  return worst;
}

// Solution on the lattice with twice the spacing, obstacle sampled at the
// coinciding nodes.
inline std::vector<double> coarse_guess(const BubbleConfig& cfg, const ObstacleField& fine, const PsorOptions& opt) {
  const DiskGrid& fg = *fine.grid;
  const double coarse_s = 2.0 * fg.spacing();
  auto cg = DiskGrid::make(cfg.rim_radius, coarse_s);
  std::vector<double> guess(fg.node_count(), 0.0);
  if (cg->interior_nodes().size() < 64) return {};

  ObstacleField coarse(cg);
  for (int node : cg->interior_nodes()) {
    const int fi = 2 * cg->lattice_i(node);
    const int fj = 2 * cg->lattice_j(node);
    coarse.phi[node] = fine.phi[fg.index(fi, fj)];
  }
  std::vector<double> cz = coarse_guess(cfg, coarse, opt);
  const double load = cfg.load_ratio();
  if (cz.empty()) {
    cz.assign(cg->node_count(), 0.0);
    for (int node : cg->interior_nodes())
      cz[node] = std::min(cfg.rest_height(std::hypot(cg->x_of(node), cg->y_of(node))), coarse.phi[node]);
  }
  const double coarse_tol = opt.update_tol * 4.0;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep)
    if (psor_sweep(*cg, cz, coarse.phi, load, opt.omega) < coarse_tol) break;

  HeightField chf(cg);
  chf.z = std::move(cz);
  for (int node : fg.interior_nodes())
    guess[node] = std::min(chf.sample(fg.x_of(node), fg.y_of(node)), fine.phi[node]);
  return guess;
}

}  // namespace detail

/// Obstacle problem: minimize the membrane energy subject to z <= phi with
/// z = 0 on the rim, by projected successive over-relaxation.
///
/// Converged when the largest nodal update of a sweep is below update_tol and
/// the KKT residual is below kkt_tol. Throws SolverError after max_sweeps.
inline HeightField solve_membrane(const BubbleConfig& cfg, const ObstacleField& obstacle,
                                  const PsorOptions& opt = {}, SolveStats* stats = nullptr) {
  cfg.validate();
  if (obstacle.grid->radius() != cfg.rim_radius || obstacle.grid->spacing() != cfg.grid_spacing)
    throw InvalidArgument("obstacle grid does not match the bubble configuration");
  if (!(opt.omega > 0.0 && opt.omega < 2.0)) throw InvalidArgument("PSOR relaxation must lie in (0, 2)");
  const DiskGrid& grid = *obstacle.grid;
  const double load = cfg.load_ratio();

  HeightField hf(obstacle.grid);
  std::vector<double> guess;
  if (opt.coarse_start && !obstacle.empty()) guess = detail::coarse_guess(cfg, obstacle, opt);
  if (!guess.empty()) {
    hf.z = std::move(guess);
  } else {
    for (int node : grid.interior_nodes())
      hf.z[node] = std::min(cfg.rest_height(std::hypot(grid.x_of(node), grid.y_of(node))), obstacle.phi[node]);
  }

  SolveStats local;
  SolveStats& st = stats ? *stats : local;
  st = SolveStats{};
  if (opt.record_energy) st.energy.push_back(membrane_energy(grid, hf.z, load));

  constexpr int kKktEvery = 16;
  bool converged = false;
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    st.last_update = detail::psor_sweep(grid, hf.z, obstacle.phi, load, opt.omega);
    st.sweeps = sweep;
    if (opt.record_energy) st.energy.push_back(membrane_energy(grid, hf.z, load));
    if (st.last_update < opt.update_tol && (sweep % kKktEvery == 0 || st.last_update == 0.0)) {
      st.kkt_residual = detail::max_kkt(grid, hf.z, obstacle.phi, load);
      if (st.kkt_residual <= opt.kkt_tol) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    st.kkt_residual = detail::max_kkt(grid, hf.z, obstacle.phi, load);
    throw SolverError("membrane solver did not converge after " + std::to_string(opt.max_sweeps) +
                          " sweeps (last update " + std::to_string(st.last_update) + " mm, residual " +
                          std::to_string(st.kkt_residual) + ")",
                      st.last_update, st.kkt_residual);
  }
  hf.contact = contact_mask(hf, obstacle, opt.contact_tol);
  return hf;
}

}  // namespace softbubble::membrane
