#include "anyonvlasov/tf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anyv::tf {

Trap Trap::harmonic() {
  Trap t;
  t.evaluate = [](Vec2 x) { return x.norm2(); };
  t.growth_exponent = 2.0;
  t.parameters = {1.0};
  t.lower_c = 1.0;
  t.lower_C = 0.0;
  t.name = "harmonic";
  return t;
}

Trap Trap::power(double s, double coeff) {
  if (!(s > 1.0) || !(coeff > 0.0)) throw InvalidInput("Trap::power: need s > 1 and coeff > 0");
  Trap t;
  t.evaluate = [s, coeff](Vec2 x) { return coeff * std::pow(x.norm2(), 0.5 * s); };
  t.growth_exponent = s;
  t.parameters = {coeff, s};
  t.lower_c = coeff;
  t.lower_C = 0.0;
  t.name = "power";
  return t;
}

Trap Trap::flat() {
  Trap t;
  t.evaluate = [](Vec2) { return 0.0; };
  t.growth_exponent = 0.0;
  t.lower_c = 0.0;
  t.lower_C = 0.0;
  t.name = "flat";
  return t;
}

void Trap::check_confinement(const Grid2D& grid) const {
  if (!(growth_exponent > 1.0))
    throw InvalidInput("trap: confinement requires growth exponent s > 1");
  const double xs[3] = {grid.xmin(), 0.5 * (grid.xmin() + grid.xmax()), grid.xmax()};
  const double ys[3] = {grid.ymin(), 0.5 * (grid.ymin() + grid.ymax()), grid.ymax()};
  for (double gx : xs)
    for (double gy : ys) {
      if (gx == xs[1] && gy == ys[1]) continue;  // skip the center
      const Vec2 x{gx, gy};
      const double bound = lower_c * std::pow(x.norm(), growth_exponent) - lower_C;
      if (evaluate(x) < bound - 1e-12 * std::max(1.0, std::abs(bound)))
        throw InvalidInput("trap: potential violates its confinement lower bound at the grid extremes");
    }
}

double tf_energy(const DensityField& rho, const Trap& trap) {
  if (rho.values.size() != rho.grid.size()) throw InvalidInput("tf_energy: field size mismatch");
  const Grid2D& g = rho.grid;
  double quad = 0.0, pot = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double r = rho.at(i, j);
      if (!(r >= 0.0)) throw InvalidInput("tf_energy: density must be nonnegative");
      const double w = g.weight(i, j);
      quad += r * r * w;
      pot += trap(g.node(i, j)) * r * w;
    }
  return kTwoPi * quad + pot;
}

TFSolution solve_tf(const Trap& trap, double mass, const Grid2D& grid, double tol) {
  if (!(mass > 0.0)) throw InvalidInput("solve_tf: target mass must be positive");
  if (!grid.cell_centered) throw InvalidInput("solve_tf: requires a cell-centered grid (midpoint rule)");
  trap.check_confinement(grid);

  std::vector<double> pot(grid.size());
  double v_min = std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double v = trap(grid.node(i, j));
      pot[grid.idx(i, j)] = v;
      v_min = std::min(v_min, v);
    }

  const double cell = grid.h * grid.h;
  const auto mass_at = [&](double lambda) {
    double m = 0.0;
    for (double v : pot) m += std::max(lambda - v, 0.0);
    return m * cell / (4.0 * kPi);
  };

  double lo = v_min;
  double hi = v_min + 4.0 * kPi * mass / cell;  // one cell alone already reaches the target
  if (!(mass_at(hi) >= mass))
    throw NumericFailure("solve_tf: mass map cannot bracket the target");

  double lambda = 0.5 * (lo + hi);
  for (int iter = 0; iter < 300; ++iter) {
    lambda = 0.5 * (lo + hi);
    const double m = mass_at(lambda);
    if (std::abs(m - mass) < tol && (hi - lo) < 1e-13 * std::max(1.0, std::abs(lambda))) break;
    (m < mass ? lo : hi) = lambda;
  }
  if (std::abs(mass_at(lambda) - mass) > std::max(tol, 1e-12 * mass) * 16.0)
    throw NumericFailure("solve_tf: bisection failed to meet the mass tolerance");

  TFSolution sol;
  sol.rho.grid = grid;
  sol.rho.values.resize(grid.size());
  for (std::size_t k = 0; k < pot.size(); ++k)
    sol.rho.values[k] = std::max(lambda - pot[k], 0.0) / (4.0 * kPi);

  // The bathtub support must stay strictly inside the box.
  for (int i = 0; i < grid.nx; ++i)
    if (sol.rho.at(i, 0) > 0.0 || sol.rho.at(i, grid.ny - 1) > 0.0)
      throw NumericFailure("solve_tf: domain too small, bathtub support touches the grid boundary");
  for (int j = 0; j < grid.ny; ++j)
    if (sol.rho.at(0, j) > 0.0 || sol.rho.at(grid.nx - 1, j) > 0.0)
      throw NumericFailure("solve_tf: domain too small, bathtub support touches the grid boundary");

  sol.lambda = lambda;
  sol.mass = sol.rho.mass();
  sol.energy = tf_energy(sol.rho, trap);
  return sol;
}

double perturbed_infimum_bound(double e_tf, double eps, double gamma) {
  if (!(eps >= 0.0 && eps < 0.5) || !(gamma >= 0.0 && gamma < 0.5))
    throw InvalidInput("perturbed_infimum_bound: need 0 <= eps, gamma < 1/2");
  return (1.0 - 2.0 * eps) * (1.0 - gamma) * e_tf;
}

}  // namespace anyv::tf
