#pragma once

// Resampling of symmetric measures from their empirical measures, in exact
// rational arithmetic on finite state spaces, together with the phase-space
// tiling, occupation-moment bounds, and Monte Carlo violation estimates that
// quantify the semi-classical Pauli principle.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <functional>
#include <vector>

#include "anyonvlasov/common.hpp"
#include "anyonvlasov/rng.hpp"

namespace anyv::df {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Exact discrete core.

// A measure on S^arity with rational atom weights; the flat index is base-S
// with the first coordinate fastest.
struct DiscreteMeasure {
  int states = 1;
  int arity = 0;
  std::vector<BigRat> weights;

  std::size_t atom_count() const;
  BigRat total_mass() const;
};

std::size_t power_size(int base, int exponent);

// Average over all coordinate permutations (exact).
DiscreteMeasure symmetrize(const DiscreteMeasure& mu);
bool is_symmetric(const DiscreteMeasure& mu);

// First-k marginal of a symmetric measure (trailing coordinates summed out).
DiscreteMeasure marginal(const DiscreteMeasure& mu, int arity);

// The resampled measure on S^arity: draw the configuration from mu, then
// arity iid uniform coordinate picks. Exact enumeration over all atoms.
DiscreteMeasure df_resample(const DiscreteMeasure& mu, int arity);

// Closed forms of the resampled measure for arity <= 3, assembled from the
// low-order marginals; an independent route for cross-checking df_resample.
DiscreteMeasure df_resample_closed_form(const DiscreteMeasure& mu, int arity);

// One draw from the resampled measure (configuration draw + coordinate picks).
std::vector<int> df_sample(const DiscreteMeasure& mu, int arity, Rng& rng);

// Atomwise total variation sum |a - b| (range [0, 2] for probabilities).
BigRat tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);
double tv_distance_double(const DiscreteMeasure& a, const DiscreteMeasure& b);

// 2 n (n - 1) / N, the resampling error bound in the same convention.
BigRat resampling_tv_bound(int arity, int particles);

// A random symmetric probability measure with denominator-bounded weights.
DiscreteMeasure random_symmetric_measure(int states, int particles, Rng& rng,
                                         int resolution = 1000);

// Mass of subset^arity under the measure.
BigRat subset_power_mass(const DiscreteMeasure& mu, const std::vector<int>& subset);

// Checks int_{Omega^k} mu^{(k)} <= omega_volume^k / (planck_cell^k N...(N-k+1))
// for every k <= max_arity, with Omega identified with the given state subset.
bool box_admissible(const DiscreteMeasure& mu, const std::vector<int>& subset, int max_arity,
                    const BigRat& omega_volume, const BigRat& planck_cell);

// ---------------------------------------------------------------------------
// Combinatorics.

BigInt binomial_big(int n, int k);

// Stirling numbers of the second kind; arity capped at 64.
BigInt stirling2(int n, int k);

// ---------------------------------------------------------------------------
// Occupation-moment bounds.

// N^{-n} sum_{k=1}^n S(n,k) (omega_volume / planck_cell)^k, the bound on the
// resampled mass of Omega^n for box-admissible measures.
BigRat box_mass_moment_bound_exact(int arity, int particles, const BigRat& omega_volume,
                                   const BigRat& planck_cell);
double box_mass_moment_bound(int arity, int particles, double hbar, double omega_volume);

// (1+eps)^{-n} (2 pi)^{2n} omega_volume^{-n} times the moment bound, assembled
// in log space; the probability bound for one (1+eps)-overfilled cell.
double pauli_violation_bound(int arity, int particles, double hbar, double omega_volume,
                             double eps);

struct OptimalBound {
  int arity = 1;
  double bound = 0.0;
};

// Minimizes pauli_violation_bound over arity in [1, min(particles, 64, cap)].
OptimalBound best_violation_bound(int particles, double hbar, double omega_volume, double eps,
                                  int arity_cap = 64);

// ---------------------------------------------------------------------------
// Phase-space tiling and Monte Carlo violation estimates.

// Axis-aligned congruent tiles covering [-L, L)^2 x [-P, P)^2 with
// L = per_axis * l_x, P = per_axis * l_p. Exact lower-edge ties go to the
// lower tile.
struct Tiling {
  double l_x = 1.0;
  double l_p = 1.0;
  int per_axis = 1;

  double extent_x() const { return per_axis * l_x; }
  double extent_p() const { return per_axis * l_p; }
  int tiles_per_axis() const { return 2 * per_axis; }
  long tile_count() const;
  double cell_volume() const { return l_x * l_x * l_p * l_p; }

  // Flat tile index, or -1 when the point lies outside the tiled box.
  long locate(const PhasePoint& z) const;
  PhasePoint tile_center(long index) const;
};

// Piecewise-constant phase-space and position densities of one configuration.
struct AveragedMeasure {
  Tiling tiling;
  std::vector<double> tile_value;      // count / (N cell_volume)
  std::vector<double> position_value;  // x-tile count / (N l_x^2)
  long outside = 0;                    // particles outside the tiled box
};

AveragedMeasure average_map(const std::vector<PhasePoint>& config, const Tiling& tiling);

// Integral of a function against the averaged measure, midpoint per tile.
double integrate_against(const AveragedMeasure& measure,
                         const std::function<double(PhasePoint)>& f);

// One semi-classical configuration of the harmonic ground state: positions
// from the normalized Thomas-Fermi profile, momenta uniform in the local
// momentum disc.
std::vector<PhasePoint> harmonic_semiclassical_sample(int count, double lambda, Rng& rng);

struct ViolationEstimate {
  double estimate = 0.0;
  double lower = 0.0;      // Wilson interval, one standard score
  double upper = 0.0;
  long threshold_count = 0;  // per-tile occupancy that counts as a violation
  long trials = 0;
};

// Fraction of sampled configurations with some tile at averaged value
// >= (1 + eps) / (2 pi)^2. Deterministic for fixed seed regardless of thread
// count.
ViolationEstimate mc_violation_probability(
    const std::function<std::vector<PhasePoint>(Rng&)>& sampler, const Tiling& tiling,
    int particles, double eps, long trials, std::uint64_t seed);

}  // namespace anyv::df
