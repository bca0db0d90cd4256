#pragma once

// Phase-space densities on (x, p) product grids, the Vlasov energy with the
// density-generated gauge field, the explicit bathtub minimizer, and the
// anyonic momentum distribution t(p).
//
// Normalization convention: phase-space mass is (2 pi)^2, i.e.
// (2 pi)^{-2} iint m dx dp = 1 for a unit-mass state.

#include <functional>
#include <vector>

#include "anyonvlasov/common.hpp"
#include "anyonvlasov/grid.hpp"
#include "anyonvlasov/kernels.hpp"
#include "anyonvlasov/tf_solver.hpp"

namespace anyv::vlasov {

// Momentum-space disc attached to one spatial node.
struct PBall {
  Vec2 center;
  double radius = 0.0;
};

// Exact area of the intersection of the disc |q - center| <= radius with the
// axis-aligned rectangle [lo.x, hi.x] x [lo.y, hi.y].
double disc_rect_intersection_area(Vec2 center, double radius, Vec2 lo, Vec2 hi);

// A phase-space density in one of two storages:
//   - ball storage: one momentum disc per x-node, value `fill` inside it,
//     with boundary p-cells carrying their exact covered fraction;
//   - dense storage: arbitrary values on the 4D product grid, p-fastest.
// Both grids are cell-centered.
struct PhaseSpaceDensity {
  Grid2D x_grid;
  Grid2D p_grid;
  std::vector<PBall> balls;    // size x_grid.size() for ball storage
  double fill = 1.0;           // occupancy level of the ball interior
  std::vector<double> dense;   // size x_grid.size() * p_grid.size() otherwise

  bool ball_storage() const { return !balls.empty(); }

  std::size_t dense_index(int ix, int iy, int ipx, int ipy) const {
    return (x_grid.idx(ix, iy) * p_grid.ny + ipy) * p_grid.nx + ipx;
  }

  // Value at a (x-node, p-cell) pair; for ball storage this is fill times the
  // covered fraction of the p-cell.
  double value(int ix, int iy, int ipx, int ipy) const;

  // Mass of the momentum fiber over one x-node: int m(x, .) dp.
  double fiber_mass(int ix, int iy) const;
};

struct VlasovSetup {
  tf::Trap trap;
  std::function<Vec2(Vec2)> external_field;  // A_e; empty means zero
  double beta = 0.0;                         // statistics strength
  kernels::GaugeKernelRef kernel;            // smeared table or pointlike

  Vec2 external_at(Vec2 x) const { return external_field ? external_field(x) : Vec2{}; }
};

// rho_m(x) = (2 pi)^{-2} int m(x, p) dp, by exact fiber areas for ball
// storage and by p-quadrature for dense storage.
DensityField position_marginal(const PhaseSpaceDensity& m);

// Combined field A_e + beta A[rho] sampled on rho's grid.
VectorField2D total_gauge_field(const DensityField& rho, const VlasovSetup& setup);

// The bathtub minimizer m(x,p) = 1{|p + A_e(x) + beta A[rho](x)|^2 <= 4 pi
// rho(x)} in ball storage. Throws if any momentum disc is clipped by the
// p-grid box.
PhaseSpaceDensity build_minimizer(const DensityField& rho, const VlasovSetup& setup,
                                  const Grid2D& p_grid);

// A momentum box just containing all minimizer discs, with a safety margin.
Grid2D fit_p_grid(const DensityField& rho, const VlasovSetup& setup, int nodes_per_axis,
                  double margin = 1.10);

// (2 pi)^{-2} iint |p + A_e + beta A[rho_m]|^2 m + int V rho_m, with the gauge
// field computed from position_marginal(m) (no self-consistency iteration).
double vlasov_energy(const PhaseSpaceDensity& m, const VlasovSetup& setup);

// t(p) = int 1{|p + A_e(x) + beta A[rho](x)|^2 <= 4 pi rho(x)} dx by x-node
// quadrature, evaluated at the requested momenta.
std::vector<double> momentum_distribution(const DensityField& rho, const VlasovSetup& setup,
                                          const std::vector<Vec2>& p_points);

struct PauliMassReport {
  double max_value = 0.0;
  double min_value = 0.0;
  double mass_ratio = 0.0;  // (2 pi)^{-2} iint m
  long violation_count = 0; // nodes/cells outside [0, 1] beyond rounding slack
};

PauliMassReport pauli_and_mass_report(const PhaseSpaceDensity& m);

}  // namespace anyv::vlasov
