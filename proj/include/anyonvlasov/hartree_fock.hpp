#pragma once

// Wick (Hartree-Fock) evaluation of the expanded gauge-interaction Hamiltonian
// on Slater determinants, the Hartree functional it collapses to without
// exchange, and two independent oracles used to validate the term algebra:
// a dense two-particle contraction and a Monte Carlo evaluation of analytic
// orbital families.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "anyonvlasov/coherent_husimi.hpp"
#include "anyonvlasov/common.hpp"
#include "anyonvlasov/grid.hpp"
#include "anyonvlasov/kernels.hpp"
#include "anyonvlasov/tf_solver.hpp"

namespace anyv::hf {

using coherent::SlaterState;

struct InteractionOperators {
  double hbar = 1.0;
  double alpha = 0.0;
  tf::Trap trap = tf::Trap::harmonic();
  std::function<Vec2(Vec2)> external_field;  // A_e; empty means zero
  kernels::GaugeKernelRef kernel;            // smeared gauge kernel or pointlike

  Vec2 external_at(Vec2 x) const { return external_field ? external_field(x) : Vec2{}; }
};

// Signed contributions to the Wick energy; the total is their plain sum.
struct HFEnergyBreakdown {
  double kinetic_potential = 0.0;
  double mixed_direct = 0.0;
  double mixed_exchange = 0.0;
  double singular_two_body_direct = 0.0;
  double singular_two_body_exchange = 0.0;
  double three_body_direct = 0.0;
  double three_body_exchange_single = 0.0;
  double three_body_exchange_cyclic = 0.0;

  double total() const {
    return kinetic_potential + mixed_direct + mixed_exchange + singular_two_body_direct +
           singular_two_body_exchange + three_body_direct + three_body_exchange_single +
           three_body_exchange_cyclic;
  }
};

// Full Wick energy of a Slater determinant, term by term.
HFEnergyBreakdown hf_energy(const SlaterState& state, const InteractionOperators& ops);

// p^A psi = -i hbar (central difference) + A_e psi, component-wise; the
// discrete operator is Hermitian for the uniform cell inner product.
std::array<std::vector<Complex>, 2> magnetic_gradient(const Grid2D& grid,
                                                      const std::vector<Complex>& psi,
                                                      const InteractionOperators& ops);

// The self-consistent gauge field of the one-body density, v * rho_gamma.
VectorField2D self_gauge_field(const SlaterState& state, const InteractionOperators& ops);

// sum_j ||(p^A + alpha A_self) psi_j||^2.
double magnetic_kinetic_trace(const SlaterState& state, const InteractionOperators& ops);

// Per-particle Hartree energy of a one-body density with the given kinetic
// trace: (trace + int V rho) / mass(rho).
double hartree_energy(const DensityField& gamma_density, double kinetic_trace,
                      const tf::Trap& trap);

// Independent route 1: the two-particle energy by dense contraction of the
// antisymmetrized wave function, sliced over the second particle. Identical
// finite-difference and quadrature conventions to hf_energy, so agreement is
// at rounding level. Requires exactly two orbitals.
double expanded_energy_two_body(const SlaterState& state, const InteractionOperators& ops);

// An orbital given in closed form, with the derivatives the Monte Carlo
// evaluation needs.
struct AnalyticOrbital {
  std::function<Complex(Vec2)> value;
  std::function<std::array<Complex, 2>(Vec2)> gradient;
  std::function<Complex(Vec2)> laplacian;
};

// Oscillator eigenfunction of -hbar^2 Laplacian + |x|^2 at levels
// (level_x, level_y), boosted by exp(i boost.x) (a common boost keeps a
// family orthonormal).
AnalyticOrbital analytic_ho_orbital(double hbar, int level_x, int level_y, Vec2 boost = {});

// Closed-form orbital sampled on a grid.
std::vector<Complex> sample_orbital(const Grid2D& grid, const AnalyticOrbital& orbital);

struct OracleResult {
  double value = 0.0;
  double standard_error = 0.0;
};

// Independent route 2: self-normalized importance sampling of the expanded
// Hamiltonian's quadratic form on the Slater determinant of the given
// analytic orbitals. Proposals are iid centered Gaussians of the given width
// per coordinate. Assumes a divergence-free external field. Deterministic for
// fixed seed regardless of thread count.
OracleResult expanded_energy_mc(const std::vector<AnalyticOrbital>& orbitals,
                                const InteractionOperators& ops, long samples,
                                double proposal_width, std::uint64_t seed);

// Calibrated a-priori bound on the energy shift between the smeared and the
// pointlike gauge kernel, linear in the smearing radius.
double regularization_gap_bound(double radius, double reference_energy);

}  // namespace anyv::hf
