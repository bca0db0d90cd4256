#pragma once

// Squeezed coherent wave packets, discrete hbar-Fourier transforms, Husimi
// functions of Slater determinants, and the phase-space marginal identities
// used to validate them numerically.

#include <cstdint>
#include <vector>

#include "anyonvlasov/common.hpp"
#include "anyonvlasov/grid.hpp"

namespace anyv::coherent {

// Width parameters of the packet family: position variance hbar_x / 2 per
// coordinate, momentum variance hbar_p / 2, with hbar_x * hbar_p = hbar^2.
struct SqueezedScales {
  double hbar = 1.0;
  double hbar_x = 1.0;

  double hbar_p() const { return hbar * hbar / hbar_x; }
  static SqueezedScales isotropic(double hbar) { return SqueezedScales{hbar, hbar}; }
};

// F_{x,p}(y) = (pi hbar_x)^{-1/2} exp(-|y - x|^2 / (2 hbar_x)) exp(i p.y / hbar)
// sampled on the grid. Requires at least 4 nodes per sqrt(hbar_x).
std::vector<Complex> coherent_amplitude(const Grid2D& grid, const SqueezedScales& scales,
                                        PhasePoint z);

// Exact continuum modulus |<F_{z1}, F_{z2}>| =
// exp(-|x1-x2|^2/(4 hbar_x) - |p1-p2|^2/(4 hbar_p)).
double coherent_overlap_modulus(const SqueezedScales& scales, PhasePoint z1, PhasePoint z2);

// <F_z, psi> with the grid inner product (conjugation on the packet).
Complex coherent_overlap(const Grid2D& grid, const std::vector<Complex>& psi,
                         const SqueezedScales& scales, PhasePoint z);

// An orthonormal family of orbitals sampled on a common grid.
struct SlaterState {
  Grid2D grid;
  std::vector<std::vector<Complex>> orbitals;

  int count() const { return static_cast<int>(orbitals.size()); }
  Complex inner(const std::vector<Complex>& a, const std::vector<Complex>& b) const;
  double gram_defect() const;  // max_ij |<psi_i, psi_j> - delta_ij|
};

// Orbitals drawn as iid complex Gaussians then orthonormalized.
SlaterState random_slater_state(const Grid2D& grid, int count, std::uint64_t seed);

// Normalized Hermite function h_n(u) = H_n(u) e^{-u^2/2} / sqrt(2^n n! sqrt(pi)).
double hermite_function(int n, double u);

// Eigenfunction of -hbar^2 Laplacian + |x|^2 with 1D levels (level_x, level_y).
std::vector<Complex> ho_orbital(const Grid2D& grid, double hbar, int level_x, int level_y);

// Lowest `count` oscillator orbitals ordered by shell, then by level_x.
SlaterState ho_slater_state(const Grid2D& grid, double hbar, int count);

// (2 pi hbar)^{-1} sum_y psi(y) exp(-i p.y / hbar) h^2 at the given momenta.
std::vector<Complex> fourier_hbar(const Grid2D& grid, const std::vector<Complex>& psi,
                                  double hbar, const std::vector<Vec2>& p_points);

// The momentum grid on which the discrete hbar-Fourier transform is unitary:
// spacing 2 pi hbar / (n h), same node count, centered at zero.
Grid2D dual_momentum_grid(const Grid2D& grid, double hbar);

// t(p) = sum_j |F_hbar[psi_j](p)|^2 at the given momenta.
std::vector<double> momentum_density(const SlaterState& state, double hbar,
                                     const std::vector<Vec2>& p_points);

// m^(1)(z) = sum_j |<psi_j, F_z>|^2 and the pair function
// m^(2)(z1,z2) = m^(1)(z1) m^(1)(z2) - |K(z1,z2)|^2 with
// K(z1,z2) = sum_j <F_{z1}, psi_j><psi_j, F_{z2}>.
double husimi1(const SlaterState& state, const SqueezedScales& scales, PhasePoint z);
std::vector<double> husimi1_points(const SlaterState& state, const SqueezedScales& scales,
                                   const std::vector<PhasePoint>& points);
Complex husimi_kernel(const SlaterState& state, const SqueezedScales& scales, PhasePoint z1,
                      PhasePoint z2);
double husimi2(const SlaterState& state, const SqueezedScales& scales, PhasePoint z1,
               PhasePoint z2);

// m^(1) on the product of two cell-centered phase grids, p-fastest layout:
// value(ix, iy, ipx, ipy) at ((iy*nx + ix)*pny + ipy)*pnx + ipx.
std::vector<double> husimi_on_product_grid(const SlaterState& state, const SqueezedScales& scales,
                                           const Grid2D& x_grid, const Grid2D& p_grid);

// (2 pi hbar)^{-2} iint m^(1) dz over the product grid; the completeness of
// the packet family makes this the orbital count.
double resolution_of_identity_check(const SlaterState& state, const SqueezedScales& scales,
                                    const Grid2D& x_grid, const Grid2D& p_grid);

struct MarginalCheck {
  double sup_difference = 0.0;
  double sup_reference = 0.0;
};

struct MarginalChecks {
  MarginalCheck position;  // (2pi)^{-2} int m dp  vs  hbar^2 (rho * g^2)(x)
  MarginalCheck momentum;  // (2pi)^{-2} int m dx  vs  hbar^2 (t * G^2)(p)
};

// Both first-marginal identities of the Husimi function, evaluated on the
// nodes of the respective factor grid. rho = sum_j |psi_j|^2, g^2 the squared
// position envelope, t the momentum density, G^2 the squared momentum
// envelope.
MarginalChecks marginal_relation_checks(const SlaterState& state, const SqueezedScales& scales,
                                        const Grid2D& x_grid, const Grid2D& p_grid);

}  // namespace anyv::coherent
