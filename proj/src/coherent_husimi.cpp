#include "anyonvlasov/coherent_husimi.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <thread>

#include "anyonvlasov/rng.hpp"

namespace anyv::coherent {
namespace {

void require_positive_scales(const SqueezedScales& scales) {
  if (!(scales.hbar > 0.0) || !(scales.hbar_x > 0.0))
    throw InvalidInput("coherent: scales must be positive");
}

void require_packet_resolution(const Grid2D& grid, const SqueezedScales& scales) {
  require_positive_scales(scales);
  if (grid.h > 0.25 * std::sqrt(scales.hbar_x) * (1.0 + 1e-12))
    throw InvalidInput("coherent: grid too coarse, need at least 4 nodes per sqrt(hbar_x)");
}

void require_cell_centered(const Grid2D& grid, const char* what) {
  if (!grid.cell_centered)
    throw InvalidInput(std::string(what) + ": cell-centered grid required");
}

// Per-axis factors of conj(F_z) on the state grid: envelope times e^{-i p y / hbar}.
std::vector<Complex> packet_axis(const Grid2D& grid, const SqueezedScales& scales, bool y_axis,
                                 double center, double momentum) {
  const int n = y_axis ? grid.ny : grid.nx;
  const double norm = std::pow(kPi * scales.hbar_x, -0.25);
  std::vector<Complex> out(n);
  for (int i = 0; i < n; ++i) {
    const double y = y_axis ? grid.y(i) : grid.x(i);
    const double d = y - center;
    const double envelope = norm * std::exp(-d * d / (2.0 * scales.hbar_x));
    out[i] = std::polar(envelope, -momentum * y / scales.hbar);
  }
  return out;
}

void run_chunked(std::size_t jobs, const std::function<void(std::size_t, std::size_t)>& body) {
  const int threads = std::min<std::size_t>(thread_count(), jobs);
  if (threads <= 1) {
    body(0, jobs);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (jobs + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(jobs, begin + chunk);
    if (begin < end) pool.emplace_back(body, begin, end);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<Complex> coherent_amplitude(const Grid2D& grid, const SqueezedScales& scales,
                                        PhasePoint z) {
  require_packet_resolution(grid, scales);
  auto cx = packet_axis(grid, scales, false, z.x.x, z.p.x);
  auto cy = packet_axis(grid, scales, true, z.x.y, z.p.y);
  // packet_axis carries e^{-i p y / hbar}; the amplitude itself needs the
  // conjugate phase.
  for (auto& v : cx) v = std::conj(v);
  for (auto& v : cy) v = std::conj(v);
  std::vector<Complex> out(grid.size());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out[grid.idx(i, j)] = cx[i] * cy[j];
  return out;
}

double coherent_overlap_modulus(const SqueezedScales& scales, PhasePoint z1, PhasePoint z2) {
  require_positive_scales(scales);
  const Vec2 dx = z1.x - z2.x;
  const Vec2 dp = z1.p - z2.p;
  return std::exp(-dx.norm2() / (4.0 * scales.hbar_x) - dp.norm2() / (4.0 * scales.hbar_p()));
}

Complex coherent_overlap(const Grid2D& grid, const std::vector<Complex>& psi,
                         const SqueezedScales& scales, PhasePoint z) {
  require_packet_resolution(grid, scales);
  if (psi.size() != grid.size()) throw InvalidInput("coherent_overlap: size mismatch");
  const auto cx = packet_axis(grid, scales, false, z.x.x, z.p.x);
  const auto cy = packet_axis(grid, scales, true, z.x.y, z.p.y);
  Complex sum = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    Complex row = 0.0;
    for (int i = 0; i < grid.nx; ++i)
      row += cx[i] * psi[grid.idx(i, j)] * grid.weight_x(i);
    sum += row * cy[j] * grid.weight_y(j);
  }
  return sum;
}

Complex SlaterState::inner(const std::vector<Complex>& a, const std::vector<Complex>& b) const {
  Complex sum = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    Complex row = 0.0;
    for (int i = 0; i < grid.nx; ++i)
      row += std::conj(a[grid.idx(i, j)]) * b[grid.idx(i, j)] * grid.weight_x(i);
    sum += row * grid.weight_y(j);
  }
  return sum;
}

double SlaterState::gram_defect() const {
  double defect = 0.0;
  for (int a = 0; a < count(); ++a) {
    for (int b = a; b < count(); ++b) {
      const Complex g = inner(orbitals[a], orbitals[b]);
      const double target = (a == b) ? 1.0 : 0.0;
      defect = std::max(defect, std::abs(g - target));
    }
  }
  return defect;
}

SlaterState random_slater_state(const Grid2D& grid, int count, std::uint64_t seed) {
  if (count < 1 || static_cast<std::size_t>(count) > grid.size())
    throw InvalidInput("random_slater_state: orbital count out of range");
  SlaterState state;
  state.grid = grid;
  state.orbitals.resize(count);
  Rng rng(seed);
  for (auto& orbital : state.orbitals) {
    orbital.resize(grid.size());
    for (auto& v : orbital) v = Complex(rng.normal(), rng.normal());
  }
  // Modified Gram-Schmidt with one re-orthogonalization pass.
  for (int j = 0; j < count; ++j) {
    auto& v = state.orbitals[j];
    for (int pass = 0; pass < 2; ++pass) {
      for (int k = 0; k < j; ++k) {
        const Complex c = state.inner(state.orbitals[k], v);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * state.orbitals[k][i];
      }
    }
    const double norm = std::sqrt(std::real(state.inner(v, v)));
    if (!(norm > 1e-10)) throw NumericFailure("random_slater_state: degenerate draw");
    for (auto& val : v) val /= norm;
  }
  return state;
}

double hermite_function(int n, double u) {
  if (n < 0) throw InvalidInput("hermite_function: negative level");
  const double h0 = std::pow(kPi, -0.25) * std::exp(-0.5 * u * u);
  if (n == 0) return h0;
  double prev = h0;
  double curr = std::sqrt(2.0) * u * h0;
  for (int k = 2; k <= n; ++k) {
    const double next = u * std::sqrt(2.0 / k) * curr - std::sqrt((k - 1.0) / k) * prev;
    prev = curr;
    curr = next;
  }
  return curr;
}

std::vector<Complex> ho_orbital(const Grid2D& grid, double hbar, int level_x, int level_y) {
  if (!(hbar > 0.0)) throw InvalidInput("ho_orbital: hbar must be positive");
  const double scale = std::sqrt(hbar);
  const double norm = 1.0 / scale;  // hbar^{-1/4} per axis, squared over two axes
  std::vector<double> fx(grid.nx), fy(grid.ny);
  for (int i = 0; i < grid.nx; ++i) fx[i] = hermite_function(level_x, grid.x(i) / scale);
  for (int j = 0; j < grid.ny; ++j) fy[j] = hermite_function(level_y, grid.y(j) / scale);
  std::vector<Complex> out(grid.size());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out[grid.idx(i, j)] = norm * fx[i] * fy[j];
  return out;
}

SlaterState ho_slater_state(const Grid2D& grid, double hbar, int count) {
  if (count < 1) throw InvalidInput("ho_slater_state: need at least one orbital");
  SlaterState state;
  state.grid = grid;
  for (int shell = 0; state.count() < count; ++shell) {
    for (int lx = 0; lx <= shell && state.count() < count; ++lx)
      state.orbitals.push_back(ho_orbital(grid, hbar, lx, shell - lx));
  }
  return state;
}

std::vector<Complex> fourier_hbar(const Grid2D& grid, const std::vector<Complex>& psi,
                                  double hbar, const std::vector<Vec2>& p_points) {
  require_cell_centered(grid, "fourier_hbar");
  if (psi.size() != grid.size()) throw InvalidInput("fourier_hbar: size mismatch");
  if (!(hbar > 0.0)) throw InvalidInput("fourier_hbar: hbar must be positive");
  const double scale = grid.h * grid.h / (kTwoPi * hbar);

  std::vector<Complex> out(p_points.size());
  run_chunked(p_points.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<Complex> ex(grid.nx), ey(grid.ny);
    for (std::size_t ip = begin; ip < end; ++ip) {
      const Vec2 p = p_points[ip];
      for (int i = 0; i < grid.nx; ++i) ex[i] = std::polar(1.0, -p.x * grid.x(i) / hbar);
      for (int j = 0; j < grid.ny; ++j) ey[j] = std::polar(1.0, -p.y * grid.y(j) / hbar);
      Complex sum = 0.0;
      for (int j = 0; j < grid.ny; ++j) {
        Complex row = 0.0;
        for (int i = 0; i < grid.nx; ++i) row += psi[grid.idx(i, j)] * ex[i];
        sum += row * ey[j];
      }
      out[ip] = scale * sum;
    }
  });
  return out;
}

Grid2D dual_momentum_grid(const Grid2D& grid, double hbar) {
  require_cell_centered(grid, "dual_momentum_grid");
  if (grid.nx != grid.ny) throw InvalidInput("dual_momentum_grid: square grid required");
  const int n = grid.nx;
  Grid2D dual;
  dual.cell_centered = true;
  dual.nx = dual.ny = n;
  dual.h = kTwoPi * hbar / (n * grid.h);
  dual.x0 = dual.y0 = -(0.5 * n + 0.5) * dual.h;
  return dual;
}

std::vector<double> momentum_density(const SlaterState& state, double hbar,
                                     const std::vector<Vec2>& p_points) {
  std::vector<double> out(p_points.size(), 0.0);
  for (const auto& orbital : state.orbitals) {
    const auto transformed = fourier_hbar(state.grid, orbital, hbar, p_points);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::norm(transformed[i]);
  }
  return out;
}

namespace {

// Overlaps <F_z, psi_j> for all orbitals of a cell-centered state.
std::vector<Complex> packet_overlaps(const SlaterState& state, const SqueezedScales& scales,
                                     PhasePoint z) {
  require_cell_centered(state.grid, "husimi");
  require_packet_resolution(state.grid, scales);
  const Grid2D& g = state.grid;
  const auto cx = packet_axis(g, scales, false, z.x.x, z.p.x);
  const auto cy = packet_axis(g, scales, true, z.x.y, z.p.y);
  const double cell = g.h * g.h;
  std::vector<Complex> out(state.count());
  for (int a = 0; a < state.count(); ++a) {
    const auto& psi = state.orbitals[a];
    Complex sum = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      Complex row = 0.0;
      for (int i = 0; i < g.nx; ++i) row += cx[i] * psi[g.idx(i, j)];
      sum += row * cy[j];
    }
    out[a] = cell * sum;
  }
  return out;
}

}  // namespace

double husimi1(const SlaterState& state, const SqueezedScales& scales, PhasePoint z) {
  double sum = 0.0;
  for (const Complex& o : packet_overlaps(state, scales, z)) sum += std::norm(o);
  return sum;
}

std::vector<double> husimi1_points(const SlaterState& state, const SqueezedScales& scales,
                                   const std::vector<PhasePoint>& points) {
  std::vector<double> out(points.size());
  run_chunked(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = husimi1(state, scales, points[i]);
  });
  return out;
}

Complex husimi_kernel(const SlaterState& state, const SqueezedScales& scales, PhasePoint z1,
                      PhasePoint z2) {
  const auto o1 = packet_overlaps(state, scales, z1);
  const auto o2 = packet_overlaps(state, scales, z2);
  Complex k = 0.0;
  for (int a = 0; a < state.count(); ++a) k += o1[a] * std::conj(o2[a]);
  return k;
}

double husimi2(const SlaterState& state, const SqueezedScales& scales, PhasePoint z1,
               PhasePoint z2) {
  const auto o1 = packet_overlaps(state, scales, z1);
  const auto o2 = packet_overlaps(state, scales, z2);
  double m1 = 0.0, m2 = 0.0;
  Complex k = 0.0;
  for (int a = 0; a < state.count(); ++a) {
    m1 += std::norm(o1[a]);
    m2 += std::norm(o2[a]);
    k += o1[a] * std::conj(o2[a]);
  }
  return m1 * m2 - std::norm(k);
}

std::vector<double> husimi_on_product_grid(const SlaterState& state, const SqueezedScales& scales,
                                           const Grid2D& x_grid, const Grid2D& p_grid) {
  require_cell_centered(state.grid, "husimi_on_product_grid");
  require_cell_centered(x_grid, "husimi_on_product_grid x-grid");
  require_cell_centered(p_grid, "husimi_on_product_grid p-grid");
  require_packet_resolution(state.grid, scales);

  const Grid2D& g = state.grid;
  const int nx = g.nx, ny = g.ny;
  const int Nx = x_grid.nx, Ny = x_grid.ny;
  const int Px = p_grid.nx, Py = p_grid.ny;
  const double norm = std::pow(kPi * scales.hbar_x, -0.25);

  // Phase tables e^{-i P y / hbar} scaled by the axis step.
  std::vector<Complex> phase1(static_cast<std::size_t>(Px) * nx);
  for (int p = 0; p < Px; ++p)
    for (int i = 0; i < nx; ++i)
      phase1[static_cast<std::size_t>(p) * nx + i] =
          g.h * std::polar(1.0, -p_grid.x(p) * g.x(i) / scales.hbar);
  std::vector<Complex> phase2(static_cast<std::size_t>(Py) * ny);
  for (int p = 0; p < Py; ++p)
    for (int j = 0; j < ny; ++j)
      phase2[static_cast<std::size_t>(p) * ny + j] =
          g.h * std::polar(1.0, -p_grid.y(p) * g.y(j) / scales.hbar);

  // Envelope tables per phase x-node.
  std::vector<double> env1(static_cast<std::size_t>(Nx) * nx);
  for (int a = 0; a < Nx; ++a)
    for (int i = 0; i < nx; ++i) {
      const double d = g.x(i) - x_grid.x(a);
      env1[static_cast<std::size_t>(a) * nx + i] =
          norm * std::exp(-d * d / (2.0 * scales.hbar_x));
    }
  std::vector<double> env2(static_cast<std::size_t>(Ny) * ny);
  for (int b = 0; b < Ny; ++b)
    for (int j = 0; j < ny; ++j) {
      const double d = g.y(j) - x_grid.y(b);
      env2[static_cast<std::size_t>(b) * ny + j] =
          norm * std::exp(-d * d / (2.0 * scales.hbar_x));
    }

  std::vector<double> m(static_cast<std::size_t>(Nx) * Ny * Px * Py, 0.0);

  run_chunked(Nx, [&](std::size_t begin, std::size_t end) {
    std::vector<Complex> stage(static_cast<std::size_t>(Px) * ny);
    std::vector<Complex> packet_row(Px * Py);
    for (std::size_t ax = begin; ax < end; ++ax) {
      const double* e1 = env1.data() + ax * nx;
      for (const auto& psi : state.orbitals) {
        // stage(p1, y2) = sum_{y1} env1 * phase1 * psi(y1, y2)
        for (int p1 = 0; p1 < Px; ++p1) {
          const Complex* ph = phase1.data() + static_cast<std::size_t>(p1) * nx;
          for (int j = 0; j < ny; ++j) {
            Complex acc = 0.0;
            const Complex* row = psi.data() + static_cast<std::size_t>(j) * nx;
            for (int i = 0; i < nx; ++i) acc += e1[i] * ph[i] * row[i];
            stage[static_cast<std::size_t>(p1) * ny + j] = acc;
          }
        }
        for (int by = 0; by < Ny; ++by) {
          const double* e2 = env2.data() + static_cast<std::size_t>(by) * ny;
          for (int p1 = 0; p1 < Px; ++p1) {
            const Complex* st = stage.data() + static_cast<std::size_t>(p1) * ny;
            for (int p2 = 0; p2 < Py; ++p2) {
              const Complex* ph = phase2.data() + static_cast<std::size_t>(p2) * ny;
              Complex acc = 0.0;
              for (int j = 0; j < ny; ++j) acc += e2[j] * ph[j] * st[j];
              packet_row[p2 * Px + p1] = acc;
            }
          }
          double* out = m.data() + ((static_cast<std::size_t>(by) * Nx + ax) * Py) * Px;
          for (int q = 0; q < Px * Py; ++q) out[q] += std::norm(packet_row[q]);
        }
      }
    }
  });

  return m;
}

double resolution_of_identity_check(const SlaterState& state, const SqueezedScales& scales,
                                    const Grid2D& x_grid, const Grid2D& p_grid) {
  const auto m = husimi_on_product_grid(state, scales, x_grid, p_grid);
  double total = 0.0;
  for (double v : m) total += v;
  const double cell = x_grid.h * x_grid.h * p_grid.h * p_grid.h;
  const double scale = 1.0 / (kTwoPi * scales.hbar * kTwoPi * scales.hbar);
  return total * cell * scale;
}

MarginalChecks marginal_relation_checks(const SlaterState& state, const SqueezedScales& scales,
                                        const Grid2D& x_grid, const Grid2D& p_grid) {
  const auto m = husimi_on_product_grid(state, scales, x_grid, p_grid);
  const Grid2D& g = state.grid;
  const int Nx = x_grid.nx, Ny = x_grid.ny, Px = p_grid.nx, Py = p_grid.ny;
  const double inv_2pi2 = 1.0 / (kTwoPi * kTwoPi);
  const double hbar2 = scales.hbar * scales.hbar;

  MarginalChecks checks;

  // Position side: (2 pi)^{-2} sum_p m * hp^2 against hbar^2 (rho * g^2)(x).
  std::vector<double> rho(g.size(), 0.0);
  for (const auto& psi : state.orbitals)
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += std::norm(psi[i]);

  const double p_cell = p_grid.h * p_grid.h;
  const double x_cell = g.h * g.h;
  for (int by = 0; by < Ny; ++by) {
    for (int ax = 0; ax < Nx; ++ax) {
      const double* slab = m.data() + (static_cast<std::size_t>(by) * Nx + ax) * Px * Py;
      double lhs = 0.0;
      for (int q = 0; q < Px * Py; ++q) lhs += slab[q];
      lhs *= p_cell * inv_2pi2;

      const Vec2 x{x_grid.x(ax), x_grid.y(by)};
      double rhs = 0.0;
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          const double dx = g.x(i) - x.x, dy = g.y(j) - x.y;
          rhs += rho[g.idx(i, j)] * std::exp(-(dx * dx + dy * dy) / scales.hbar_x);
        }
      }
      rhs *= hbar2 * x_cell / (kPi * scales.hbar_x);

      checks.position.sup_difference = std::max(checks.position.sup_difference, std::abs(lhs - rhs));
      checks.position.sup_reference = std::max(checks.position.sup_reference, std::abs(rhs));
    }
  }

  // Momentum side: (2 pi)^{-2} sum_x m * hx^2 against hbar^2 (t * G^2)(p).
  const Grid2D dual = dual_momentum_grid(g, scales.hbar);
  std::vector<Vec2> dual_points;
  dual_points.reserve(dual.size());
  for (int j = 0; j < dual.ny; ++j)
    for (int i = 0; i < dual.nx; ++i) dual_points.push_back({dual.x(i), dual.y(j)});
  const std::vector<double> t = momentum_density(state, scales.hbar, dual_points);
  const double dual_cell = dual.h * dual.h;
  const double hbar_p = scales.hbar_p();
  const double phase_cell = x_grid.h * x_grid.h;

  for (int p2 = 0; p2 < Py; ++p2) {
    for (int p1 = 0; p1 < Px; ++p1) {
      double lhs = 0.0;
      for (int by = 0; by < Ny; ++by)
        for (int ax = 0; ax < Nx; ++ax)
          lhs += m[((static_cast<std::size_t>(by) * Nx + ax) * Py + p2) * Px + p1];
      lhs *= phase_cell * inv_2pi2;

      const Vec2 p{p_grid.x(p1), p_grid.y(p2)};
      double rhs = 0.0;
      for (std::size_t k = 0; k < dual_points.size(); ++k) {
        const double dx = dual_points[k].x - p.x, dy = dual_points[k].y - p.y;
        rhs += t[k] * std::exp(-(dx * dx + dy * dy) / hbar_p);
      }
      rhs *= hbar2 * dual_cell / (kPi * hbar_p);

      checks.momentum.sup_difference = std::max(checks.momentum.sup_difference, std::abs(lhs - rhs));
      checks.momentum.sup_reference = std::max(checks.momentum.sup_reference, std::abs(rhs));
    }
  }

  return checks;
}

}  // namespace anyv::coherent
