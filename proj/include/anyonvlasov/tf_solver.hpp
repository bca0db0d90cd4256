#pragma once

// Thomas-Fermi ground state: minimize 2 pi int rho^2 + int V rho over
// nonnegative densities of fixed mass. The minimizer is the bathtub profile
// rho(x) = (lambda - V(x))_+ / (4 pi) with the multiplier lambda fixed by the
// mass constraint, found here by bisection of the monotone mass map.

#include <functional>
#include <string>
#include <vector>

#include "anyonvlasov/common.hpp"
#include "anyonvlasov/grid.hpp"

namespace anyv::tf {

struct Trap {
  std::function<double(Vec2)> evaluate;
  double growth_exponent = 2.0;     // s in the confinement lower bound
  std::vector<double> parameters;   // coefficients, meaning set by the factory
  double lower_c = 1.0;             // confinement: V(x) >= lower_c |x|^s - lower_C
  double lower_C = 0.0;
  std::string name = "custom";

  double operator()(Vec2 x) const { return evaluate(x); }

  static Trap harmonic();                       // V = |x|^2
  static Trap power(double s, double coeff);    // V = coeff |x|^s, s > 1
  // V = 0 with no confinement claim; usable with tf_energy only.
  static Trap flat();

  // Confinement sanity check at the grid extremes (corners and edge
  // midpoints). Throws InvalidInput on failure.
  void check_confinement(const Grid2D& grid) const;
};

struct TFSolution {
  DensityField rho;
  double lambda = 0.0;
  double energy = 0.0;
  double mass = 0.0;
};

// 2 pi int rho^2 + int V rho by grid quadrature.
double tf_energy(const DensityField& rho, const Trap& trap);

// Bisection on lambda of the mass map lambda -> int (lambda - V)_+ / (4 pi)
// until the mass error is below tol. The bracket [min V, min V + 4 pi mass /
// cell area] always straddles the target. Errors: domain-too-small if the
// bathtub support touches the grid boundary at the solved lambda;
// non-bracketing if the mass map cannot reach the target.
TFSolution solve_tf(const Trap& trap, double mass, const Grid2D& grid, double tol = 1e-10);

// Lower bound (1 - 2 eps)(1 - gamma) e_tf for the relaxed problem with
// occupancy cap (1 + eps) and mass deficit gamma. Requires 0 <= eps, gamma < 1/2.
double perturbed_infimum_bound(double e_tf, double eps, double gamma);

}  // namespace anyv::tf
