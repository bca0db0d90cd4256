#pragma once

// The smeared 2D Coulomb kernel w_R, its radial derivative tables built from
// Newton's theorem, and the statistical gauge field A[rho] = perp-grad(w) * rho
// as a grid convolution.
//
// The smearing profile chi is a unit-mass radial bump: constant 1/pi^2 on the
// unit disc, zero outside radius 2, joined on [1, 2] by a monotone cosine
// bridge whose shape exponent is solved so the total mass is exactly 1. w_R is
// the 2D Coulomb potential of chi_R(x) = chi(x/R)/R^2; by Newton's theorem its
// radial derivative is (enclosed mass)/u, which is 1/u outside radius 2R.

#include <iosfwd>
#include <vector>

#include "anyonvlasov/common.hpp"
#include "anyonvlasov/grid.hpp"

namespace anyv::kernels {

struct SmearingProfile {
  double inner_value = 1.0 / (kPi * kPi);  // value of chi on r <= 1
  double bridge_shape = 0.0;               // solved exponent q of the bridge
  double normalization_residual = 0.0;     // quadrature mass minus 1

  // chi(r): inner_value on r<=1, cosine bridge on [1,2], 0 on r>=2.
  double value(double r) const;
  // d(chi)/dr, zero outside [1,2]; continuous (the bridge is C^1).
  double derivative(double r) const;
  // Mass inside radius r: integral of chi over B(0,r); equals 1 for r >= 2.
  double mass_within(double r) const;
};

// Solve the bridge exponent by bisection so the profile has unit mass.
// `bridge_family_parameter` seeds the bisection bracket (pass 0 for the
// default bracket); the solved exponent is returned in `bridge_shape`.
SmearingProfile build_profile(double bridge_family_parameter = 0.0);

// Radial node layout for the derivative tables: nodes concentrated near 0 and
// near the matching radius 2R, where the derivatives vary fastest.
struct RadialGridSpec {
  int interior_nodes = 2048;  // nodes on (0, 2R]
  int exterior_nodes = 256;   // nodes on (2R, u_max]
  double u_max_over_R = 8.0;  // table extent
};

// Tabulated radial data of w_R. Queries at u >= 2R use the exact exterior
// closed forms (full mass enclosed); queries below 2R interpolate the tables
// linearly.
struct RadialKernel {
  double R = 0.0;
  SmearingProfile profile;
  std::vector<double> u;    // radial nodes, ascending, u.front() == 0
  std::vector<double> M;    // enclosed mass of chi_R inside B(0, u)
  std::vector<double> dw;   // d/du w_R = M(u)/u
  std::vector<double> d2w;  // d2/du2 w_R = -M(u)/u^2 + 2 pi chi_R(u)
  std::vector<double> d3w;  // d3/du3 w_R = 2M(u)/u^3 - 2 pi chi_R(u)/u + 2 pi chi_R'(u)

  double chi_R(double s) const { return profile.value(s / R) / (R * R); }
  double dchi_R(double s) const { return profile.derivative(s / R) / (R * R * R); }

  double cumulative_mass(double s) const;  // M(s); 1 for s >= 2R
  double dw_at(double s) const;            // 1/s exactly for s >= 2R
  double d2w_at(double s) const;
  double d3w_at(double s) const;

  // Azimuthal scale of the perpendicular gradient: perp-grad w_R at
  // displacement u equals perp_scale(|u|) * u^perp. Finite at 0.
  double perp_scale(double s) const;

  // Table maxima used by the sup-bound checks.
  double max_abs_dw() const;
  double max_abs_d2w() const;
};

RadialKernel radial_kernel(const SmearingProfile& profile, double R,
                           const RadialGridSpec& spec = {});

// A gauge kernel is either a smeared table or the pointlike perp-grad log|x|
// (no table). The pointlike kernel's singular cell is its exact cell average,
// which vanishes by antisymmetry.
struct GaugeKernelRef {
  const RadialKernel* table = nullptr;  // nullptr selects the pointlike kernel

  bool pointlike() const { return table == nullptr; }
  // perp-grad w at displacement u; zero vector at u = 0.
  Vec2 perp_grad(Vec2 u) const;
  // |perp-grad w|^2 as a function of |u| (used by the singular two-body term).
  double perp_grad_sq(double s) const;
};

// A[rho](x) = sum_y perp-grad(w)(x - y) rho(y) dy by zero-padded FFT
// convolution on rho's grid (exact discrete linear convolution; the padding
// to twice the box eliminates wraparound entirely).
VectorField2D gauge_field(const DensityField& rho, const GaugeKernelRef& kernel);

// Plain O(n^4) summation route, for cross-validation.
VectorField2D gauge_field_direct(const DensityField& rho, const GaugeKernelRef& kernel);

// L^{4/3} norm of perp-grad(w_R) - perp-grad(w_0) by radial quadrature; the
// gap lives on B(0, 2R) where the enclosed mass differs from 1.
double kernel_gap_norm(double R, const SmearingProfile& profile);
double kernel_gap_norm(double R);

// Total discrete magnetic flux: central-difference curl of A summed over
// interior nodes times the cell area. For A = A[rho] this approximates
// 2 pi * mass(rho).
double total_curl_flux(const VectorField2D& field);

// Table export, columns: u, M, dw, d2w, d3w.
void write_kernel_csv(const RadialKernel& kernel, std::ostream& out);

}  // namespace anyv::kernels
