#include "anyonvlasov/diaconis_freedman.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace anyv::df {
namespace {

constexpr int kMaxArity = 64;

std::vector<int> decode(std::size_t index, int states, int arity) {
  std::vector<int> digits(arity);
  for (int i = 0; i < arity; ++i) {
    digits[i] = static_cast<int>(index % states);
    index /= states;
  }
  return digits;
}

std::size_t encode(const std::vector<int>& digits, int states) {
  std::size_t index = 0;
  for (std::size_t i = digits.size(); i-- > 0;) index = index * states + digits[i];
  return index;
}

void require_measure(const DiscreteMeasure& mu) {
  if (mu.states < 1 || mu.arity < 0) throw InvalidInput("df: malformed measure");
  if (mu.weights.size() != power_size(mu.states, mu.arity))
    throw InvalidInput("df: weight table size mismatch");
}

BigRat rat_pow(const BigRat& base, int exponent) {
  BigRat out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

BigInt falling_factorial(int n, int k) {
  BigInt out = 1;
  for (int i = 0; i < k; ++i) out *= (n - i);
  return out;
}

}  // namespace

std::size_t power_size(int base, int exponent) {
  if (base < 1 || exponent < 0) throw InvalidInput("df: bad table shape");
  std::size_t out = 1;
  for (int i = 0; i < exponent; ++i) {
    if (out > (std::size_t{1} << 27) / static_cast<std::size_t>(base))
      throw InvalidInput("df: state-space table too large to enumerate");
    out *= static_cast<std::size_t>(base);
  }
  return out;
}

std::size_t DiscreteMeasure::atom_count() const { return power_size(states, arity); }

BigRat DiscreteMeasure::total_mass() const {
  BigRat total = 0;
  for (const auto& w : weights) total += w;
  return total;
}

DiscreteMeasure symmetrize(const DiscreteMeasure& mu) {
  require_measure(mu);
  // Orbit averaging: every atom of a sorted-digit orbit gets the orbit mean.
  std::vector<std::size_t> representative(mu.weights.size());
  std::vector<BigRat> orbit_sum(mu.weights.size(), BigRat(0));
  std::vector<long> orbit_size(mu.weights.size(), 0);
  for (std::size_t a = 0; a < mu.weights.size(); ++a) {
    auto digits = decode(a, mu.states, mu.arity);
    std::sort(digits.begin(), digits.end());
    const std::size_t rep = encode(digits, mu.states);
    representative[a] = rep;
    orbit_sum[rep] += mu.weights[a];
    orbit_size[rep] += 1;
  }
  DiscreteMeasure out;
  out.states = mu.states;
  out.arity = mu.arity;
  out.weights.resize(mu.weights.size());
  for (std::size_t a = 0; a < mu.weights.size(); ++a) {
    const std::size_t rep = representative[a];
    out.weights[a] = orbit_sum[rep] / orbit_size[rep];
  }
  return out;
}

bool is_symmetric(const DiscreteMeasure& mu) {
  const DiscreteMeasure sym = symmetrize(mu);
  return sym.weights == mu.weights;
}

DiscreteMeasure marginal(const DiscreteMeasure& mu, int arity) {
  require_measure(mu);
  if (arity < 0 || arity > mu.arity) throw InvalidInput("df: marginal arity out of range");
  DiscreteMeasure out;
  out.states = mu.states;
  out.arity = arity;
  const std::size_t kept = power_size(mu.states, arity);
  out.weights.assign(kept, BigRat(0));
  // First coordinates are the low digits, so the kept block is contiguous.
  for (std::size_t a = 0; a < mu.weights.size(); ++a) out.weights[a % kept] += mu.weights[a];
  return out;
}

DiscreteMeasure df_resample(const DiscreteMeasure& mu, int arity) {
  require_measure(mu);
  if (arity < 1 || arity > kMaxArity) throw InvalidInput("df_resample: arity out of range");
  const int N = mu.arity;
  if (N < 1) throw InvalidInput("df_resample: the source must have coordinates");

  DiscreteMeasure out;
  out.states = mu.states;
  out.arity = arity;
  const std::size_t targets = power_size(mu.states, arity);
  out.weights.assign(targets, BigRat(0));

  BigInt n_pow = 1;
  for (int i = 0; i < arity; ++i) n_pow *= N;

  std::vector<int> counts(mu.states);
  for (std::size_t a = 0; a < mu.weights.size(); ++a) {
    if (mu.weights[a] == 0) continue;
    std::fill(counts.begin(), counts.end(), 0);
    std::size_t rest = a;
    for (int i = 0; i < N; ++i) {
      counts[rest % mu.states] += 1;
      rest /= mu.states;
    }
    for (std::size_t e = 0; e < targets; ++e) {
      long prod = 1;
      std::size_t idx = e;
      for (int i = 0; i < arity && prod != 0; ++i) {
        prod *= counts[idx % mu.states];
        idx /= mu.states;
      }
      if (prod != 0) out.weights[e] += mu.weights[a] * BigRat(prod, n_pow);
    }
  }
  return out;
}

DiscreteMeasure df_resample_closed_form(const DiscreteMeasure& mu, int arity) {
  require_measure(mu);
  if (arity < 1 || arity > 3) throw InvalidInput("df_resample_closed_form: arity must be 1..3");
  if (!is_symmetric(mu)) throw InvalidInput("df_resample_closed_form: symmetric source required");
  const int N = mu.arity;
  const int S = mu.states;
  const DiscreteMeasure m1 = marginal(mu, 1);

  DiscreteMeasure out;
  out.states = S;
  out.arity = arity;
  out.weights.assign(power_size(S, arity), BigRat(0));

  if (arity == 1) {
    out.weights = m1.weights;
    return out;
  }

  const DiscreteMeasure m2 = marginal(mu, 2);
  if (arity == 2) {
    const BigRat keep(N - 1, N);
    const BigRat collapse(1, N);
    for (int a = 0; a < S; ++a)
      for (int b = 0; b < S; ++b) {
        BigRat w = keep * m2.weights[static_cast<std::size_t>(b) * S + a];
        if (a == b) w += collapse * m1.weights[a];
        out.weights[static_cast<std::size_t>(b) * S + a] = w;
      }
    return out;
  }

  const DiscreteMeasure m3 = marginal(mu, 3);
  const BigRat keep(static_cast<long>(N - 1) * (N - 2), static_cast<long>(N) * N);
  const BigRat pair(N - 1, static_cast<long>(N) * N);
  const BigRat collapse(1, static_cast<long>(N) * N);
  for (int a = 0; a < S; ++a) {
    for (int b = 0; b < S; ++b) {
      for (int c = 0; c < S; ++c) {
        const std::size_t idx =
            (static_cast<std::size_t>(c) * S + b) * S + a;
        BigRat w = keep * m3.weights[idx];
        if (a == b) w += pair * m2.weights[static_cast<std::size_t>(c) * S + a];
        if (a == c) w += pair * m2.weights[static_cast<std::size_t>(b) * S + a];
        if (b == c) w += pair * m2.weights[static_cast<std::size_t>(b) * S + a];
        if (a == b && b == c) w += collapse * m1.weights[a];
        out.weights[idx] = w;
      }
    }
  }
  return out;
}

std::vector<int> df_sample(const DiscreteMeasure& mu, int arity, Rng& rng) {
  require_measure(mu);
  if (arity < 1) throw InvalidInput("df_sample: arity must be positive");
  const double u = rng.uniform() * static_cast<double>(mu.total_mass());
  double acc = 0.0;
  std::size_t atom = mu.weights.size() - 1;
  for (std::size_t a = 0; a < mu.weights.size(); ++a) {
    acc += static_cast<double>(mu.weights[a]);
    if (u < acc) {
      atom = a;
      break;
    }
  }
  const auto digits = decode(atom, mu.states, mu.arity);
  std::vector<int> out(arity);
  for (int i = 0; i < arity; ++i) out[i] = digits[rng.below(static_cast<std::uint64_t>(mu.arity))];
  return out;
}

BigRat tv_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  require_measure(a);
  require_measure(b);
  if (a.states != b.states || a.arity != b.arity)
    throw InvalidInput("tv_distance: measures live on different spaces");
  BigRat sum = 0;
  for (std::size_t i = 0; i < a.weights.size(); ++i)
    sum += boost::multiprecision::abs(a.weights[i] - b.weights[i]);
  return sum;
}

double tv_distance_double(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  return static_cast<double>(tv_distance(a, b));
}

BigRat resampling_tv_bound(int arity, int particles) {
  if (arity < 1 || particles < 1) throw InvalidInput("resampling_tv_bound: bad arguments");
  return BigRat(2L * arity * (arity - 1), particles);
}

DiscreteMeasure random_symmetric_measure(int states, int particles, Rng& rng, int resolution) {
  if (resolution < 1) throw InvalidInput("random_symmetric_measure: resolution must be positive");
  DiscreteMeasure raw;
  raw.states = states;
  raw.arity = particles;
  raw.weights.resize(power_size(states, particles));
  for (auto& w : raw.weights)
    w = BigRat(static_cast<long>(rng.below(static_cast<std::uint64_t>(resolution) + 1)));
  DiscreteMeasure sym = symmetrize(raw);
  BigRat total = sym.total_mass();
  if (total == 0) {
    sym.weights[0] = 1;
    total = 1;
  }
  for (auto& w : sym.weights) w /= total;
  return sym;
}

BigRat subset_power_mass(const DiscreteMeasure& mu, const std::vector<int>& subset) {
  require_measure(mu);
  std::vector<char> member(mu.states, 0);
  for (int s : subset) {
    if (s < 0 || s >= mu.states) throw InvalidInput("subset_power_mass: state out of range");
    member[s] = 1;
  }
  BigRat mass = 0;
  for (std::size_t a = 0; a < mu.weights.size(); ++a) {
    if (mu.weights[a] == 0) continue;
    std::size_t rest = a;
    bool inside = true;
    for (int i = 0; i < mu.arity && inside; ++i) {
      inside = member[rest % mu.states] != 0;
      rest /= mu.states;
    }
    if (inside) mass += mu.weights[a];
  }
  return mass;
}

bool box_admissible(const DiscreteMeasure& mu, const std::vector<int>& subset, int max_arity,
                    const BigRat& omega_volume, const BigRat& planck_cell) {
  require_measure(mu);
  if (max_arity < 1 || max_arity > mu.arity) throw InvalidInput("box_admissible: bad arity");
  if (!(omega_volume > 0) || !(planck_cell > 0))
    throw InvalidInput("box_admissible: volumes must be positive");
  for (int k = 1; k <= max_arity; ++k) {
    const BigRat mass = subset_power_mass(marginal(mu, k), subset);
    const BigRat bound =
        rat_pow(omega_volume / planck_cell, k) / BigRat(falling_factorial(mu.arity, k));
    if (mass > bound) return false;
  }
  return true;
}

BigInt binomial_big(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt out = 1;
  for (int i = 0; i < k; ++i) {
    out *= (n - i);
    out /= (i + 1);
  }
  return out;
}

BigInt stirling2(int n, int k) {
  if (n < 0 || n > kMaxArity) throw InvalidInput("stirling2: arity out of the supported range");
  if (k < 0 || k > n) return 0;
  // Rolling row of the standard recurrence S(n,k) = k S(n-1,k) + S(n-1,k-1).
  std::vector<BigInt> row(static_cast<std::size_t>(n) + 1, BigInt(0));
  row[0] = 1;
  for (int m = 1; m <= n; ++m) {
    for (int j = m; j >= 1; --j) row[j] = j * row[j] + row[j - 1];
    row[0] = 0;
  }
  return row[k];
}

BigRat box_mass_moment_bound_exact(int arity, int particles, const BigRat& omega_volume,
                                   const BigRat& planck_cell) {
  if (arity < 1 || arity > kMaxArity) throw InvalidInput("moment bound: arity out of range");
  if (particles < arity) throw InvalidInput("moment bound: need at least `arity` particles");
  if (!(omega_volume > 0) || !(planck_cell > 0))
    throw InvalidInput("moment bound: volumes must be positive");
  const BigRat ratio = omega_volume / planck_cell;
  BigRat sum = 0;
  for (int k = 1; k <= arity; ++k) sum += BigRat(stirling2(arity, k)) * rat_pow(ratio, k);
  BigInt n_pow = 1;
  for (int i = 0; i < arity; ++i) n_pow *= particles;
  return sum / BigRat(n_pow);
}

namespace {

double log_box_mass_moment_bound(int arity, int particles, double hbar, double omega_volume) {
  if (arity < 1 || arity > kMaxArity) throw InvalidInput("moment bound: arity out of range");
  if (particles < arity) throw InvalidInput("moment bound: need at least `arity` particles");
  if (!(hbar > 0.0) || !(omega_volume > 0.0))
    throw InvalidInput("moment bound: hbar and volume must be positive");
  const double planck = kTwoPi * hbar * kTwoPi * hbar;
  const double log_ratio = std::log(omega_volume) - std::log(planck);
  // log-sum-exp over k of log S(n,k) + k log(ratio).
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(static_cast<std::size_t>(arity));
  for (int k = 1; k <= arity; ++k) {
    const double log_s = std::log(static_cast<double>(stirling2(arity, k)));
    logs[k - 1] = log_s + k * log_ratio;
    peak = std::max(peak, logs[k - 1]);
  }
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - peak);
  return peak + std::log(sum) - arity * std::log(static_cast<double>(particles));
}

}  // namespace

double box_mass_moment_bound(int arity, int particles, double hbar, double omega_volume) {
  return std::exp(log_box_mass_moment_bound(arity, particles, hbar, omega_volume));
}

double pauli_violation_bound(int arity, int particles, double hbar, double omega_volume,
                             double eps) {
  if (!(eps > 0.0)) throw InvalidInput("pauli_violation_bound: eps must be positive");
  const double log_prefactor =
      arity * (std::log(kTwoPi * kTwoPi) - std::log(omega_volume)) - arity * std::log1p(eps);
  return std::exp(log_prefactor + log_box_mass_moment_bound(arity, particles, hbar, omega_volume));
}

OptimalBound best_violation_bound(int particles, double hbar, double omega_volume, double eps,
                                  int arity_cap) {
  const int top = std::min({arity_cap, kMaxArity, particles});
  if (top < 1) throw InvalidInput("best_violation_bound: empty arity range");
  OptimalBound best;
  best.arity = 1;
  best.bound = pauli_violation_bound(1, particles, hbar, omega_volume, eps);
  for (int n = 2; n <= top; ++n) {
    const double b = pauli_violation_bound(n, particles, hbar, omega_volume, eps);
    if (b < best.bound) {
      best.arity = n;
      best.bound = b;
    }
  }
  return best;
}

long Tiling::tile_count() const {
  const long t = tiles_per_axis();
  return t * t * t * t;
}

namespace {

long axis_tile(double coord, double step, double extent, int tiles) {
  const double shifted = coord + extent;
  if (shifted < 0.0) return -1;
  const double u = shifted / step;
  long idx = static_cast<long>(std::floor(u));
  if (static_cast<double>(idx) == u && idx > 0) --idx;  // lower-edge tie
  if (idx < 0 || idx >= tiles) return -1;
  return idx;
}

}  // namespace

long Tiling::locate(const PhasePoint& z) const {
  const int t = tiles_per_axis();
  const long ix = axis_tile(z.x.x, l_x, extent_x(), t);
  const long iy = axis_tile(z.x.y, l_x, extent_x(), t);
  const long jx = axis_tile(z.p.x, l_p, extent_p(), t);
  const long jy = axis_tile(z.p.y, l_p, extent_p(), t);
  if (ix < 0 || iy < 0 || jx < 0 || jy < 0) return -1;
  return ((ix * t + iy) * t + jx) * t + jy;
}

PhasePoint Tiling::tile_center(long index) const {
  const int t = tiles_per_axis();
  if (index < 0 || index >= tile_count()) throw InvalidInput("tile_center: index out of range");
  const long jy = index % t;
  index /= t;
  const long jx = index % t;
  index /= t;
  const long iy = index % t;
  const long ix = index / t;
  PhasePoint z;
  z.x = Vec2{-extent_x() + (ix + 0.5) * l_x, -extent_x() + (iy + 0.5) * l_x};
  z.p = Vec2{-extent_p() + (jx + 0.5) * l_p, -extent_p() + (jy + 0.5) * l_p};
  return z;
}

AveragedMeasure average_map(const std::vector<PhasePoint>& config, const Tiling& tiling) {
  if (config.empty()) throw InvalidInput("average_map: empty configuration");
  if (tiling.per_axis < 1 || !(tiling.l_x > 0.0) || !(tiling.l_p > 0.0))
    throw InvalidInput("average_map: malformed tiling");
  if (tiling.tile_count() > (1L << 27)) throw InvalidInput("average_map: tiling too fine");

  AveragedMeasure out;
  out.tiling = tiling;
  out.tile_value.assign(static_cast<std::size_t>(tiling.tile_count()), 0.0);
  const int t = tiling.tiles_per_axis();
  out.position_value.assign(static_cast<std::size_t>(t) * t, 0.0);

  const double n = static_cast<double>(config.size());
  const double tile_unit = 1.0 / (n * tiling.cell_volume());
  const double pos_unit = 1.0 / (n * tiling.l_x * tiling.l_x);

  for (const auto& z : config) {
    const long tile = tiling.locate(z);
    if (tile < 0) {
      ++out.outside;
      continue;
    }
    out.tile_value[static_cast<std::size_t>(tile)] += tile_unit;
    const long pos = tile / (static_cast<long>(t) * t);  // (ix, iy) block
    out.position_value[static_cast<std::size_t>(pos)] += pos_unit;
  }
  return out;
}

double integrate_against(const AveragedMeasure& measure,
                         const std::function<double(PhasePoint)>& f) {
  const double vol = measure.tiling.cell_volume();
  double sum = 0.0;
  for (std::size_t i = 0; i < measure.tile_value.size(); ++i) {
    if (measure.tile_value[i] == 0.0) continue;
    sum += measure.tile_value[i] * vol * f(measure.tiling.tile_center(static_cast<long>(i)));
  }
  return sum;
}

std::vector<PhasePoint> harmonic_semiclassical_sample(int count, double lambda, Rng& rng) {
  if (count < 1 || !(lambda > 0.0)) throw InvalidInput("harmonic_semiclassical_sample: bad input");
  std::vector<PhasePoint> out(count);
  for (auto& z : out) {
    const double t = lambda * (1.0 - std::sqrt(std::max(0.0, 1.0 - rng.uniform())));
    const double r = std::sqrt(t);
    const double theta = kTwoPi * rng.uniform();
    z.x = Vec2{r * std::cos(theta), r * std::sin(theta)};
    const double pr = std::sqrt(std::max(0.0, lambda - t)) * std::sqrt(rng.uniform());
    const double phi = kTwoPi * rng.uniform();
    z.p = Vec2{pr * std::cos(phi), pr * std::sin(phi)};
  }
  return out;
}

ViolationEstimate mc_violation_probability(
    const std::function<std::vector<PhasePoint>(Rng&)>& sampler, const Tiling& tiling,
    int particles, double eps, long trials, std::uint64_t seed) {
  if (!sampler) throw InvalidInput("mc_violation_probability: sampler required");
  if (particles < 1 || trials < 1) throw InvalidInput("mc_violation_probability: bad counts");
  if (!(eps > 0.0)) throw InvalidInput("mc_violation_probability: eps must be positive");
  if (tiling.tile_count() > (1L << 27)) throw InvalidInput("mc_violation_probability: tiling too fine");

  const double raw_threshold =
      particles * (1.0 + eps) * tiling.cell_volume() / (kTwoPi * kTwoPi);
  // Occupancy count >= raw_threshold flags the tile; guard the integer
  // boundary against representation fuzz.
  long threshold = static_cast<long>(
      std::ceil(raw_threshold - 1e-9 * std::max(1.0, std::abs(raw_threshold))));
  if (threshold < 1) threshold = 1;

  ViolationEstimate out;
  out.threshold_count = threshold;
  out.trials = trials;

  long hits = 0;
  if (threshold > particles) {
    // No configuration can fill a tile this far; the estimate is exactly zero.
    hits = 0;
  } else {
    constexpr long kChunk = 64;
    const long chunk_count = (trials + kChunk - 1) / kChunk;
    std::vector<long> chunk_hits(static_cast<std::size_t>(chunk_count), 0);
    std::atomic<long> next_chunk{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;

    // A sampler misbehaving inside a worker must surface as an exception on
    // the calling thread, not terminate the process.
    auto worker = [&]() {
      try {
        std::vector<int> counts(static_cast<std::size_t>(tiling.tile_count()), 0);
        std::vector<long> touched;
        touched.reserve(static_cast<std::size_t>(particles));
        for (;;) {
          if (failed.load(std::memory_order_relaxed)) break;
          const long chunk = next_chunk.fetch_add(1);
          if (chunk >= chunk_count) break;
          long local = 0;
          const long begin = chunk * kChunk;
          const long end = std::min(trials, begin + kChunk);
          for (long trial = begin; trial < end; ++trial) {
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
            const auto config = sampler(rng);
            if (static_cast<int>(config.size()) != particles)
              throw InvalidInput("mc_violation_probability: sampler returned wrong count");
            bool violated = false;
            for (const auto& z : config) {
              const long tile = tiling.locate(z);
              if (tile < 0) continue;
              int& c = counts[static_cast<std::size_t>(tile)];
              if (c == 0) touched.push_back(tile);
              if (++c >= threshold) {
                violated = true;
                break;
              }
            }
            for (long tile : touched) counts[static_cast<std::size_t>(tile)] = 0;
            touched.clear();
            if (violated) ++local;
          }
          chunk_hits[static_cast<std::size_t>(chunk)] = local;
        }
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    };

    const int threads = static_cast<int>(
        std::max<long>(1, std::min<long>(thread_count(), chunk_count)));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    for (long h : chunk_hits) hits += h;
  }

  out.estimate = static_cast<double>(hits) / static_cast<double>(trials);
  const double t = static_cast<double>(trials);
  const double center = (hits + 0.5) / (t + 1.0);
  const double half = std::sqrt(center * (1.0 - center) / (t + 1.0));
  out.lower = std::max(0.0, center - half);
  out.upper = std::min(1.0, center + half);
  return out;
}

}  // namespace anyv::df
