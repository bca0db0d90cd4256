#include "anyonvlasov/hartree_fock.hpp"

#include <fftw3.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <thread>

#include "anyonvlasov/rng.hpp"

namespace anyv::hf {
namespace {

// Calibrated against smeared-vs-pointlike Wick energy sweeps on oscillator
// states (R in [0.05, 0.4]); the measured gap/(R e^{3/2}) ratio stays below
// 0.025, so a unit slope dominates with a wide margin.
constexpr double kGapSlope = 1.0;

void require_state(const SlaterState& state) {
  if (!state.grid.cell_centered) throw InvalidInput("hf: cell-centered grid required");
  if (state.count() < 1) throw InvalidInput("hf: empty state");
  for (const auto& orbital : state.orbitals)
    if (orbital.size() != state.grid.size()) throw InvalidInput("hf: orbital size mismatch");
}

void require_ops(const InteractionOperators& ops) {
  if (!(ops.hbar > 0.0)) throw InvalidInput("hf: hbar must be positive");
}

// Zero-padded circular convolution with the gauge kernel components, complex
// sources. Kernel transforms are cached at construction; not thread-safe.
class ConvolutionEngine {
 public:
  enum class Component { vx, vy, vsq };

  ConvolutionEngine(const Grid2D& grid, const kernels::GaugeKernelRef& kernel)
      : nx_(grid.nx), ny_(grid.ny), px_(2 * grid.nx), py_(2 * grid.ny), h_(grid.h) {
    buf_ = fftw_alloc_complex(static_cast<std::size_t>(px_) * py_);
    fwd_ = fftw_plan_dft_2d(py_, px_, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(py_, px_, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (buf_ == nullptr || fwd_ == nullptr || bwd_ == nullptr)
      throw NumericFailure("hf: FFT setup failed");

    const auto fill_and_transform = [&](auto&& sample, std::vector<Complex>& out) {
      for (int b = 0; b < py_; ++b) {
        const int dy = b < ny_ ? b : b - py_;
        for (int a = 0; a < px_; ++a) {
          const int dx = a < nx_ ? a : a - px_;
          const double v = sample(Vec2{dx * h_, dy * h_});
          buf_[static_cast<std::size_t>(b) * px_ + a][0] = v;
          buf_[static_cast<std::size_t>(b) * px_ + a][1] = 0.0;
        }
      }
      fftw_execute(fwd_);
      out.resize(static_cast<std::size_t>(px_) * py_);
      std::memcpy(out.data(), buf_, sizeof(Complex) * out.size());
    };

    fill_and_transform([&](Vec2 u) { return kernel.perp_grad(u).x; }, kx_hat_);
    fill_and_transform([&](Vec2 u) { return kernel.perp_grad(u).y; }, ky_hat_);
    fill_and_transform([&](Vec2 u) { return kernel.perp_grad_sq(u.norm()); }, ksq_hat_);
  }

  ConvolutionEngine(const ConvolutionEngine&) = delete;
  ConvolutionEngine& operator=(const ConvolutionEngine&) = delete;

  ~ConvolutionEngine() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  // out(x) = sum_y K(x - y) src(y) h^2 on the unpadded grid.
  std::vector<Complex> convolve(const std::vector<Complex>& src, Component c) {
    const std::vector<Complex>& k_hat =
        c == Component::vx ? kx_hat_ : (c == Component::vy ? ky_hat_ : ksq_hat_);
    const std::size_t padded = static_cast<std::size_t>(px_) * py_;
    std::memset(buf_, 0, sizeof(fftw_complex) * padded);
    for (int j = 0; j < ny_; ++j)
      std::memcpy(buf_ + static_cast<std::size_t>(j) * px_, src.data() + static_cast<std::size_t>(j) * nx_,
                  sizeof(Complex) * nx_);
    fftw_execute(fwd_);
    const double scale = h_ * h_ / static_cast<double>(padded);
    for (std::size_t i = 0; i < padded; ++i) {
      const Complex prod = Complex(buf_[i][0], buf_[i][1]) * k_hat[i] * scale;
      buf_[i][0] = prod.real();
      buf_[i][1] = prod.imag();
    }
    fftw_execute(bwd_);
    std::vector<Complex> out(static_cast<std::size_t>(nx_) * ny_);
    for (int j = 0; j < ny_; ++j)
      std::memcpy(out.data() + static_cast<std::size_t>(j) * nx_,
                  buf_ + static_cast<std::size_t>(j) * px_, sizeof(Complex) * nx_);
    return out;
  }

 private:
  int nx_, ny_, px_, py_;
  double h_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
  std::vector<Complex> kx_hat_, ky_hat_, ksq_hat_;
};

std::vector<double> one_body_density(const SlaterState& state) {
  std::vector<double> rho(state.grid.size(), 0.0);
  for (const auto& psi : state.orbitals)
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += std::norm(psi[i]);
  return rho;
}

}  // namespace

std::array<std::vector<Complex>, 2> magnetic_gradient(const Grid2D& grid,
                                                      const std::vector<Complex>& psi,
                                                      const InteractionOperators& ops) {
  if (psi.size() != grid.size()) throw InvalidInput("magnetic_gradient: size mismatch");
  require_ops(ops);
  const Complex mi_hbar(0.0, -ops.hbar);
  const double inv2h = 1.0 / (2.0 * grid.h);
  std::array<std::vector<Complex>, 2> out{std::vector<Complex>(grid.size()),
                                          std::vector<Complex>(grid.size())};
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.idx(i, j);
      const Complex right = i + 1 < grid.nx ? psi[grid.idx(i + 1, j)] : Complex(0.0);
      const Complex left = i > 0 ? psi[grid.idx(i - 1, j)] : Complex(0.0);
      const Complex up = j + 1 < grid.ny ? psi[grid.idx(i, j + 1)] : Complex(0.0);
      const Complex down = j > 0 ? psi[grid.idx(i, j - 1)] : Complex(0.0);
      const Vec2 a = ops.external_at({grid.x(i), grid.y(j)});
      out[0][k] = mi_hbar * (right - left) * inv2h + a.x * psi[k];
      out[1][k] = mi_hbar * (up - down) * inv2h + a.y * psi[k];
    }
  }
  return out;
}

VectorField2D self_gauge_field(const SlaterState& state, const InteractionOperators& ops) {
  require_state(state);
  require_ops(ops);
  const auto rho = one_body_density(state);
  ConvolutionEngine engine(state.grid, ops.kernel);
  std::vector<Complex> src(rho.begin(), rho.end());
  const auto ax = engine.convolve(src, ConvolutionEngine::Component::vx);
  const auto ay = engine.convolve(src, ConvolutionEngine::Component::vy);
  VectorField2D field;
  field.grid = state.grid;
  field.comp_x.resize(rho.size());
  field.comp_y.resize(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    field.comp_x[i] = ax[i].real();
    field.comp_y[i] = ay[i].real();
  }
  return field;
}

double magnetic_kinetic_trace(const SlaterState& state, const InteractionOperators& ops) {
  require_state(state);
  const VectorField2D a_self = self_gauge_field(state, ops);
  const double cell = state.grid.h * state.grid.h;
  double trace = 0.0;
  for (const auto& psi : state.orbitals) {
    const auto pa = magnetic_gradient(state.grid, psi, ops);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const Complex qx = pa[0][i] + ops.alpha * a_self.comp_x[i] * psi[i];
      const Complex qy = pa[1][i] + ops.alpha * a_self.comp_y[i] * psi[i];
      trace += (std::norm(qx) + std::norm(qy)) * cell;
    }
  }
  return trace;
}

double hartree_energy(const DensityField& gamma_density, double kinetic_trace,
                      const tf::Trap& trap) {
  const Grid2D& g = gamma_density.grid;
  if (gamma_density.values.size() != g.size()) throw InvalidInput("hartree_energy: size mismatch");
  double mass = 0.0, potential = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double w = g.weight_x(i) * g.weight_y(j);
      const double rho = gamma_density.values[g.idx(i, j)];
      mass += rho * w;
      potential += trap(Vec2{g.x(i), g.y(j)}) * rho * w;
    }
  }
  if (!(mass > 0.0)) throw InvalidInput("hartree_energy: density has no mass");
  return (kinetic_trace + potential) / mass;
}

HFEnergyBreakdown hf_energy(const SlaterState& state, const InteractionOperators& ops) {
  require_state(state);
  require_ops(ops);
  const Grid2D& g = state.grid;
  const int N = state.count();
  const double cell = g.h * g.h;
  const double alpha = ops.alpha;

  // Magnetic gradients of every orbital.
  std::vector<std::array<std::vector<Complex>, 2>> pa(N);
  for (int j = 0; j < N; ++j) pa[j] = magnetic_gradient(g, state.orbitals[j], ops);

  const std::vector<double> rho = one_body_density(state);
  std::vector<double> potential(g.size());
  for (int jy = 0; jy < g.ny; ++jy)
    for (int ix = 0; ix < g.nx; ++ix)
      potential[g.idx(ix, jy)] = ops.trap(Vec2{g.x(ix), g.y(jy)});

  HFEnergyBreakdown out;

  // Kinetic and trap terms.
  for (int j = 0; j < N; ++j)
    for (std::size_t i = 0; i < g.size(); ++i)
      out.kinetic_potential += (std::norm(pa[j][0][i]) + std::norm(pa[j][1][i])) * cell;
  for (std::size_t i = 0; i < g.size(); ++i)
    out.kinetic_potential += potential[i] * rho[i] * cell;

  ConvolutionEngine engine(g, ops.kernel);
  using Comp = ConvolutionEngine::Component;

  // Self gauge field A = v * rho.
  std::vector<Complex> rho_src(rho.begin(), rho.end());
  const auto ax_c = engine.convolve(rho_src, Comp::vx);
  const auto ay_c = engine.convolve(rho_src, Comp::vy);
  std::vector<double> ax(g.size()), ay(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    ax[i] = ax_c[i].real();
    ay[i] = ay_c[i].real();
  }

  // Mixed direct: 2 alpha sum_j Re <p^A psi_j, A psi_j>.
  {
    double acc = 0.0;
    for (int j = 0; j < N; ++j)
      for (std::size_t i = 0; i < g.size(); ++i)
        acc += (std::conj(pa[j][0][i]) * ax[i] * state.orbitals[j][i] +
                std::conj(pa[j][1][i]) * ay[i] * state.orbitals[j][i])
                   .real();
    out.mixed_direct = 2.0 * alpha * acc * cell;
  }

  // Pair products P[a][b] = conj(psi_a) psi_b and their kernel convolutions
  // D_mu[a][b] = v_mu * P[a][b].
  std::vector<std::vector<Complex>> pair(static_cast<std::size_t>(N) * N);
  std::vector<std::vector<Complex>> dx(pair.size()), dy(pair.size());
  for (int a = 0; a < N; ++a) {
    for (int b = 0; b < N; ++b) {
      auto& p = pair[static_cast<std::size_t>(a) * N + b];
      p.resize(g.size());
      for (std::size_t i = 0; i < g.size(); ++i)
        p[i] = std::conj(state.orbitals[a][i]) * state.orbitals[b][i];
      dx[static_cast<std::size_t>(a) * N + b] = engine.convolve(p, Comp::vx);
      dy[static_cast<std::size_t>(a) * N + b] = engine.convolve(p, Comp::vy);
    }
  }
  const auto pair_at = [&](int a, int b) -> const std::vector<Complex>& {
    return pair[static_cast<std::size_t>(a) * N + b];
  };
  const auto dx_at = [&](int a, int b) -> const std::vector<Complex>& {
    return dx[static_cast<std::size_t>(a) * N + b];
  };
  const auto dy_at = [&](int a, int b) -> const std::vector<Complex>& {
    return dy[static_cast<std::size_t>(a) * N + b];
  };

  // Mixed exchange: -alpha sum_{jk,mu} [<p_mu psi_j, D_mu^{kj} psi_k> +
  // <psi_j, D_mu^{kj} p_mu psi_k>].
  {
    Complex acc = 0.0;
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < N; ++k) {
        const auto& hx = dx_at(k, j);
        const auto& hy = dy_at(k, j);
        for (std::size_t i = 0; i < g.size(); ++i) {
          acc += std::conj(pa[j][0][i]) * hx[i] * state.orbitals[k][i] +
                 std::conj(pa[j][1][i]) * hy[i] * state.orbitals[k][i];
          acc += std::conj(state.orbitals[j][i]) * (hx[i] * pa[k][0][i] + hy[i] * pa[k][1][i]);
        }
      }
    }
    out.mixed_exchange = -alpha * acc.real() * cell;
  }

  // Singular two-body terms with the squared kernel.
  {
    const auto s_rho = engine.convolve(rho_src, Comp::vsq);
    double direct = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) direct += rho[i] * s_rho[i].real();
    out.singular_two_body_direct = alpha * alpha * direct * cell;

    Complex acc = 0.0;
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < N; ++k) {
        const auto s_jk = engine.convolve(pair_at(j, k), Comp::vsq);
        const auto& p_jk = pair_at(j, k);
        for (std::size_t i = 0; i < g.size(); ++i) acc += std::conj(p_jk[i]) * s_jk[i];
      }
    }
    out.singular_two_body_exchange = -alpha * alpha * acc.real() * cell;
  }

  // Three-body direct: alpha^2 int rho |A|^2.
  {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      acc += rho[i] * (ax[i] * ax[i] + ay[i] * ay[i]);
    out.three_body_direct = alpha * alpha * acc * cell;
  }

  // Three-body single exchange: -alpha^2 (A + 2 B) with
  // A = int rho sum_{kl,mu} |D_mu^{kl}|^2 and
  // B = sum_{kl} int conj(psi_l) psi_k (A . D^{kl}).
  {
    double term_a = 0.0;
    for (int k = 0; k < N; ++k)
      for (int l = 0; l < N; ++l) {
        const auto& cx = dx_at(k, l);
        const auto& cy = dy_at(k, l);
        for (std::size_t i = 0; i < g.size(); ++i)
          term_a += rho[i] * (std::norm(cx[i]) + std::norm(cy[i]));
      }

    Complex term_b = 0.0;
    for (int k = 0; k < N; ++k)
      for (int l = 0; l < N; ++l) {
        const auto& cx = dx_at(k, l);
        const auto& cy = dy_at(k, l);
        const auto& p_lk = pair_at(l, k);  // conj(psi_l) psi_k
        for (std::size_t i = 0; i < g.size(); ++i)
          term_b += p_lk[i] * (ax[i] * cx[i] + ay[i] * cy[i]);
      }

    out.three_body_exchange_single = -alpha * alpha * (term_a + 2.0 * term_b.real()) * cell;
  }

  // Three-body cyclic exchange: +2 alpha^2 Re sum_{jkl,mu}
  // int psi_j conj(psi_l) D_mu^{jk} D_mu^{kl}.
  {
    Complex acc = 0.0;
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < N; ++k) {
        const auto& ajk_x = dx_at(j, k);
        const auto& ajk_y = dy_at(j, k);
        for (int l = 0; l < N; ++l) {
          const auto& akl_x = dx_at(k, l);
          const auto& akl_y = dy_at(k, l);
          const auto& p_jl = pair_at(j, l);  // conj(psi_j) psi_l
          for (std::size_t i = 0; i < g.size(); ++i)
            acc += std::conj(p_jl[i]) * (ajk_x[i] * akl_x[i] + ajk_y[i] * akl_y[i]);
        }
      }
    }
    out.three_body_exchange_cyclic = 2.0 * alpha * alpha * acc.real() * cell;
  }

  return out;
}

double expanded_energy_two_body(const SlaterState& state, const InteractionOperators& ops) {
  require_state(state);
  require_ops(ops);
  if (state.count() != 2) throw InvalidInput("expanded_energy_two_body: exactly two orbitals");
  const Grid2D& g = state.grid;
  const double cell = g.h * g.h;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const Complex mi_hbar(0.0, -ops.hbar);
  const double inv2h = 1.0 / (2.0 * g.h);
  const auto& psi1 = state.orbitals[0];
  const auto& psi2 = state.orbitals[1];

  std::vector<double> row_sum(g.ny, 0.0);
  std::atomic<int> next_row{0};

  auto worker = [&]() {
    std::vector<Complex> phi(g.size()), gx(g.size()), gy(g.size());
    for (;;) {
      const int j2 = next_row.fetch_add(1);
      if (j2 >= g.ny) break;
      double acc = 0.0;
      for (int i2 = 0; i2 < g.nx; ++i2) {
        const Vec2 x2{g.x(i2), g.y(j2)};
        const Complex a = psi1[g.idx(i2, j2)];
        const Complex b = psi2[g.idx(i2, j2)];
        // Slice of the antisymmetrized pair function at fixed second argument.
        for (std::size_t i = 0; i < g.size(); ++i)
          phi[i] = inv_sqrt2 * (b * psi1[i] - a * psi2[i]);

        for (int jy = 0; jy < g.ny; ++jy) {
          for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t k = g.idx(ix, jy);
            const Complex right = ix + 1 < g.nx ? phi[g.idx(ix + 1, jy)] : Complex(0.0);
            const Complex left = ix > 0 ? phi[g.idx(ix - 1, jy)] : Complex(0.0);
            const Complex up = jy + 1 < g.ny ? phi[g.idx(ix, jy + 1)] : Complex(0.0);
            const Complex down = jy > 0 ? phi[g.idx(ix, jy - 1)] : Complex(0.0);
            const Vec2 ae = ops.external_at({g.x(ix), g.y(jy)});
            gx[k] = mi_hbar * (right - left) * inv2h + ae.x * phi[k];
            gy[k] = mi_hbar * (up - down) * inv2h + ae.y * phi[k];
          }
        }

        double slice = 0.0;
        for (int jy = 0; jy < g.ny; ++jy) {
          for (int ix = 0; ix < g.nx; ++ix) {
            const std::size_t k = g.idx(ix, jy);
            const Vec2 x1{g.x(ix), g.y(jy)};
            const Vec2 v = ops.kernel.perp_grad(x1 - x2);
            const double amp = std::norm(phi[k]);
            slice += std::norm(gx[k]) + std::norm(gy[k]);
            slice += ops.trap(x1) * amp;
            slice += 2.0 * ops.alpha * (std::conj(gx[k]) * v.x * phi[k] +
                                        std::conj(gy[k]) * v.y * phi[k]).real();
            slice += ops.alpha * ops.alpha * (v.x * v.x + v.y * v.y) * amp;
          }
        }
        acc += slice * cell;
      }
      row_sum[j2] = acc;
    }
  };

  const int threads = std::max(1, std::min(thread_count(), g.ny));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  double total = 0.0;
  for (double v : row_sum) total += v;
  // Both particles contribute equally by antisymmetry.
  return 2.0 * total * cell;
}

namespace {

double hermite_deriv(int n, double u) {
  if (n == 0) return -u * coherent::hermite_function(0, u);
  return std::sqrt(2.0 * n) * coherent::hermite_function(n - 1, u) -
         u * coherent::hermite_function(n, u);
}

}  // namespace

AnalyticOrbital analytic_ho_orbital(double hbar, int level_x, int level_y, Vec2 boost) {
  if (!(hbar > 0.0)) throw InvalidInput("analytic_ho_orbital: hbar must be positive");
  if (level_x < 0 || level_y < 0) throw InvalidInput("analytic_ho_orbital: negative level");
  const double s = std::sqrt(hbar);
  const double n14 = std::pow(hbar, -0.25);

  const auto fx = [=](double t) { return n14 * coherent::hermite_function(level_x, t / s); };
  const auto fy = [=](double t) { return n14 * coherent::hermite_function(level_y, t / s); };
  const auto dfx = [=](double t) { return n14 / s * hermite_deriv(level_x, t / s); };
  const auto dfy = [=](double t) { return n14 / s * hermite_deriv(level_y, t / s); };
  // h_n'' = (u^2 - 2n - 1) h_n from the oscillator equation.
  const auto d2fx = [=](double t) {
    const double u = t / s;
    return n14 / hbar * (u * u - 2.0 * level_x - 1.0) * coherent::hermite_function(level_x, u);
  };
  const auto d2fy = [=](double t) {
    const double u = t / s;
    return n14 / hbar * (u * u - 2.0 * level_y - 1.0) * coherent::hermite_function(level_y, u);
  };

  AnalyticOrbital orbital;
  orbital.value = [=](Vec2 x) {
    return fx(x.x) * fy(x.y) * std::polar(1.0, boost.x * x.x + boost.y * x.y);
  };
  orbital.gradient = [=](Vec2 x) -> std::array<Complex, 2> {
    const Complex phase = std::polar(1.0, boost.x * x.x + boost.y * x.y);
    const double base = fx(x.x) * fy(x.y);
    const Complex ib_x(0.0, boost.x), ib_y(0.0, boost.y);
    return {(dfx(x.x) * fy(x.y) + ib_x * base) * phase, (fx(x.x) * dfy(x.y) + ib_y * base) * phase};
  };
  orbital.laplacian = [=](Vec2 x) {
    const Complex phase = std::polar(1.0, boost.x * x.x + boost.y * x.y);
    const double base = fx(x.x) * fy(x.y);
    const double lap = d2fx(x.x) * fy(x.y) + fx(x.x) * d2fy(x.y);
    const Complex cross(0.0, 2.0 * (boost.x * dfx(x.x) * fy(x.y) + boost.y * fx(x.x) * dfy(x.y)));
    return (lap + cross - (boost.x * boost.x + boost.y * boost.y) * base) * phase;
  };
  return orbital;
}

std::vector<Complex> sample_orbital(const Grid2D& grid, const AnalyticOrbital& orbital) {
  std::vector<Complex> out(grid.size());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out[grid.idx(i, j)] = orbital.value({grid.x(i), grid.y(j)});
  return out;
}

namespace {

// Gauss-Jordan inverse with partial pivoting; returns the determinant.
Complex invert_small(std::vector<Complex> m, int n, std::vector<Complex>& inv) {
  inv.assign(static_cast<std::size_t>(n) * n, Complex(0.0));
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i) * n + i] = 1.0;
  Complex det = 1.0;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::abs(m[static_cast<std::size_t>(col) * n + col]);
    for (int r = col + 1; r < n; ++r) {
      const double cand = std::abs(m[static_cast<std::size_t>(r) * n + col]);
      if (cand > best) {
        best = cand;
        pivot = r;
      }
    }
    if (best == 0.0) return 0.0;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(m[static_cast<std::size_t>(pivot) * n + c], m[static_cast<std::size_t>(col) * n + c]);
        std::swap(inv[static_cast<std::size_t>(pivot) * n + c], inv[static_cast<std::size_t>(col) * n + c]);
      }
      det = -det;
    }
    const Complex diag = m[static_cast<std::size_t>(col) * n + col];
    det *= diag;
    const Complex inv_diag = 1.0 / diag;
    for (int c = 0; c < n; ++c) {
      m[static_cast<std::size_t>(col) * n + c] *= inv_diag;
      inv[static_cast<std::size_t>(col) * n + c] *= inv_diag;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const Complex factor = m[static_cast<std::size_t>(r) * n + col];
      if (factor == Complex(0.0)) continue;
      for (int c = 0; c < n; ++c) {
        m[static_cast<std::size_t>(r) * n + c] -= factor * m[static_cast<std::size_t>(col) * n + c];
        inv[static_cast<std::size_t>(r) * n + c] -= factor * inv[static_cast<std::size_t>(col) * n + c];
      }
    }
  }
  return det;
}

struct McAccumulator {
  double f_re = 0.0, f_im = 0.0, g = 0.0;
  double ff = 0.0, gg = 0.0, fg = 0.0;
};

}  // namespace

OracleResult expanded_energy_mc(const std::vector<AnalyticOrbital>& orbitals,
                                const InteractionOperators& ops, long samples,
                                double proposal_width, std::uint64_t seed) {
  require_ops(ops);
  const int N = static_cast<int>(orbitals.size());
  if (N < 1 || N > 8) throw InvalidInput("expanded_energy_mc: 1 to 8 orbitals supported");
  if (samples < 100) throw InvalidInput("expanded_energy_mc: too few samples");
  if (!(proposal_width > 0.0)) throw InvalidInput("expanded_energy_mc: width must be positive");

  double factorial = 1.0;
  for (int k = 2; k <= N; ++k) factorial *= k;
  const double sigma = proposal_width;
  const double q_norm = std::pow(kTwoPi * sigma * sigma, -N);  // (2 pi s^2)^{-1} per particle

  constexpr long kChunk = 4096;
  const long chunk_count = (samples + kChunk - 1) / kChunk;
  std::vector<McAccumulator> acc(static_cast<std::size_t>(chunk_count));
  std::atomic<long> next_chunk{0};

  auto worker = [&]() {
    std::vector<Vec2> x(N);
    std::vector<Complex> m(static_cast<std::size_t>(N) * N), inv;
    std::vector<std::array<Complex, 2>> grads(static_cast<std::size_t>(N) * N);
    std::vector<Complex> laps(static_cast<std::size_t>(N) * N);
    std::vector<std::array<Complex, 2>> ratio_grad(N);
    std::vector<Complex> ratio_lap(N);

    for (;;) {
      const long chunk = next_chunk.fetch_add(1);
      if (chunk >= chunk_count) break;
      McAccumulator local;
      const long begin = chunk * kChunk;
      const long end = std::min(samples, begin + kChunk);
      for (long s = begin; s < end; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        double log_q_exp = 0.0;
        for (int k = 0; k < N; ++k) {
          x[k] = Vec2{sigma * rng.normal(), sigma * rng.normal()};
          log_q_exp += x[k].norm2();
        }
        const double q = q_norm * std::exp(-log_q_exp / (2.0 * sigma * sigma));

        for (int k = 0; k < N; ++k) {
          for (int j = 0; j < N; ++j) {
            m[static_cast<std::size_t>(k) * N + j] = orbitals[j].value(x[k]);
            grads[static_cast<std::size_t>(k) * N + j] = orbitals[j].gradient(x[k]);
            laps[static_cast<std::size_t>(k) * N + j] = orbitals[j].laplacian(x[k]);
          }
        }
        const Complex det = invert_small(m, N, inv);
        if (det == Complex(0.0)) continue;  // measure-zero node of the determinant

        for (int k = 0; k < N; ++k) {
          std::array<Complex, 2> rg{Complex(0.0), Complex(0.0)};
          Complex rl = 0.0;
          for (int j = 0; j < N; ++j) {
            const Complex c = inv[static_cast<std::size_t>(j) * N + k];
            rg[0] += c * grads[static_cast<std::size_t>(k) * N + j][0];
            rg[1] += c * grads[static_cast<std::size_t>(k) * N + j][1];
            rl += c * laps[static_cast<std::size_t>(k) * N + j];
          }
          ratio_grad[k] = rg;
          ratio_lap[k] = rl;
        }

        const double hbar = ops.hbar;
        Complex e_loc = 0.0;
        for (int k = 0; k < N; ++k) {
          const Vec2 a = ops.external_at(x[k]);
          e_loc += -hbar * hbar * ratio_lap[k];
          e_loc += Complex(0.0, -2.0 * hbar) * (a.x * ratio_grad[k][0] + a.y * ratio_grad[k][1]);
          e_loc += a.norm2() + ops.trap(x[k]);
        }
        for (int j = 0; j < N; ++j) {
          for (int k = 0; k < N; ++k) {
            if (k == j) continue;
            const Vec2 v = ops.kernel.perp_grad(x[j] - x[k]);
            const Vec2 a = ops.external_at(x[j]);
            e_loc += ops.alpha *
                     (Complex(0.0, -2.0 * hbar) * (v.x * ratio_grad[j][0] + v.y * ratio_grad[j][1]) +
                      2.0 * (a.x * v.x + a.y * v.y));
            e_loc += ops.alpha * ops.alpha * ops.kernel.perp_grad_sq((x[j] - x[k]).norm());
            for (int l = 0; l < N; ++l) {
              if (l == j || l == k) continue;
              const Vec2 u = ops.kernel.perp_grad(x[j] - x[l]);
              e_loc += ops.alpha * ops.alpha * (v.x * u.x + v.y * u.y);
            }
          }
        }

        const double w = std::norm(det) / (factorial * q);
        const double f_re = w * e_loc.real();
        local.f_re += f_re;
        local.f_im += w * e_loc.imag();
        local.g += w;
        local.ff += f_re * f_re;
        local.gg += w * w;
        local.fg += f_re * w;
      }
      acc[static_cast<std::size_t>(chunk)] = local;
    }
  };

  const int threads =
      std::max(1, static_cast<int>(std::min<long>(thread_count(), chunk_count)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  McAccumulator total;
  for (const auto& a : acc) {
    total.f_re += a.f_re;
    total.f_im += a.f_im;
    total.g += a.g;
    total.ff += a.ff;
    total.gg += a.gg;
    total.fg += a.fg;
  }

  const double T = static_cast<double>(samples);
  if (!(total.g > 0.0)) throw NumericFailure("expanded_energy_mc: zero total weight");
  const double mean_f = total.f_re / T;
  const double mean_g = total.g / T;
  const double ratio = total.f_re / total.g;
  const double var_f = std::max(0.0, (total.ff - T * mean_f * mean_f) / (T - 1.0));
  const double var_g = std::max(0.0, (total.gg - T * mean_g * mean_g) / (T - 1.0));
  const double cov = (total.fg - T * mean_f * mean_g) / (T - 1.0);
  const double var_ratio =
      std::max(0.0, var_f - 2.0 * ratio * cov + ratio * ratio * var_g) / (T * mean_g * mean_g);
  return {ratio, std::sqrt(var_ratio)};
}

double regularization_gap_bound(double radius, double reference_energy) {
  if (radius < 0.0) throw InvalidInput("regularization_gap_bound: negative radius");
  if (reference_energy < 0.0) throw InvalidInput("regularization_gap_bound: negative energy");
  return kGapSlope * radius * std::pow(reference_energy, 1.5);
}

}  // namespace anyv::hf
