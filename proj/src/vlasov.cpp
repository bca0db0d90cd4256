#include "anyonvlasov/vlasov.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace anyv::vlasov {
namespace {

// Antiderivative of sqrt(r^2 - x^2): F(x) = (x sqrt(r^2-x^2) + r^2 asin(x/r))/2.
double chord_integral(double r, double x) {
  const double t = std::clamp(x / r, -1.0, 1.0);
  const double s = r * std::sqrt(std::max(0.0, 1.0 - t * t));
  return 0.5 * (x * s + r * r * std::asin(t));
}

// Area of disc(0, r) intersected with the corner region {x <= X, y <= Y}.
double corner_area(double r, double X, double Y) {
  if (X <= -r || Y <= -r) return 0.0;
  const double xc = std::min(X, r);
  const double quarter = kPi * r * r / 4.0;

  if (Y >= r) {
    // Full vertical extent: 2 * (F(xc) - F(-r)) with F(-r) = -pi r^2 / 4.
    return 2.0 * (chord_integral(r, xc) + quarter);
  }

  if (Y >= 0.0) {
    const double xy = std::sqrt(std::max(0.0, r * r - Y * Y));
    double area = 0.0;
    const double a1 = std::min(xc, -xy);
    area += 2.0 * (chord_integral(r, a1) + quarter);  // band where s(x) <= Y
    if (xc > -xy) {
      const double a2 = std::min(xc, xy);
      area += Y * (a2 + xy) + chord_integral(r, a2) - chord_integral(r, -xy);
    }
    if (xc > xy) {
      area += 2.0 * (chord_integral(r, xc) - chord_integral(r, xy));
    }
    return area;
  }

  // Y < 0: integrand (Y + s(x))_+ supported on |x| < sqrt(r^2 - Y^2).
  const double xb = std::sqrt(std::max(0.0, r * r - Y * Y));
  if (xc <= -xb) return 0.0;
  const double c = std::min(xc, xb);
  return Y * (c + xb) + chord_integral(r, c) - chord_integral(r, -xb);
}

}  // namespace

double disc_rect_intersection_area(Vec2 center, double radius, Vec2 lo, Vec2 hi) {
  if (radius <= 0.0 || hi.x <= lo.x || hi.y <= lo.y) return 0.0;
  const double x0 = lo.x - center.x, x1 = hi.x - center.x;
  const double y0 = lo.y - center.y, y1 = hi.y - center.y;
  double area = corner_area(radius, x1, y1) - corner_area(radius, x0, y1) -
                corner_area(radius, x1, y0) + corner_area(radius, x0, y0);
  const double cap = std::min((hi.x - lo.x) * (hi.y - lo.y), kPi * radius * radius);
  return std::clamp(area, 0.0, cap);
}

namespace {

// Covered fraction of the p-cell (ipx, ipy) by the given ball, with O(1)
// classification of fully covered / disjoint cells.
double cell_fraction(const Grid2D& p_grid, int ipx, int ipy, const PBall& ball) {
  if (ball.radius <= 0.0) return 0.0;
  const double hx = p_grid.h, hy = p_grid.h;
  const Vec2 lo{p_grid.x(ipx) - 0.5 * hx, p_grid.y(ipy) - 0.5 * hy};
  const Vec2 hi{lo.x + hx, lo.y + hy};

  const double dx_out = std::max({lo.x - ball.center.x, ball.center.x - hi.x, 0.0});
  const double dy_out = std::max({lo.y - ball.center.y, ball.center.y - hi.y, 0.0});
  const double r2 = ball.radius * ball.radius;
  if (dx_out * dx_out + dy_out * dy_out >= r2) return 0.0;

  const double dx_in = std::max(std::abs(lo.x - ball.center.x), std::abs(hi.x - ball.center.x));
  const double dy_in = std::max(std::abs(lo.y - ball.center.y), std::abs(hi.y - ball.center.y));
  if (dx_in * dx_in + dy_in * dy_in <= r2) return 1.0;

  return disc_rect_intersection_area(ball.center, ball.radius, lo, hi) / (hx * hy);
}

void validate_density(const PhaseSpaceDensity& m) {
  if (!m.x_grid.cell_centered || !m.p_grid.cell_centered)
    throw InvalidInput("phase-space densities require cell-centered grids");
  if (m.ball_storage()) {
    if (m.balls.size() != m.x_grid.size())
      throw InvalidInput("ball storage needs one ball per x-node");
  } else if (m.dense.size() != m.x_grid.size() * m.p_grid.size()) {
    throw InvalidInput("dense storage size does not match the product grid");
  }
}

}  // namespace

double PhaseSpaceDensity::value(int ix, int iy, int ipx, int ipy) const {
  if (ball_storage()) {
    return fill * cell_fraction(p_grid, ipx, ipy, balls[x_grid.idx(ix, iy)]);
  }
  return dense[dense_index(ix, iy, ipx, ipy)];
}

double PhaseSpaceDensity::fiber_mass(int ix, int iy) const {
  if (ball_storage()) {
    const double r = balls[x_grid.idx(ix, iy)].radius;
    return fill * kPi * r * r;
  }
  const double cell = p_grid.h * p_grid.h;
  double sum = 0.0;
  for (int ipy = 0; ipy < p_grid.ny; ++ipy)
    for (int ipx = 0; ipx < p_grid.nx; ++ipx)
      sum += dense[dense_index(ix, iy, ipx, ipy)];
  return sum * cell;
}

DensityField position_marginal(const PhaseSpaceDensity& m) {
  validate_density(m);
  DensityField rho;
  rho.grid = m.x_grid;
  rho.values.resize(m.x_grid.size());
  const double scale = 1.0 / (kTwoPi * kTwoPi);
  for (int iy = 0; iy < m.x_grid.ny; ++iy)
    for (int ix = 0; ix < m.x_grid.nx; ++ix)
      rho.values[m.x_grid.idx(ix, iy)] = scale * m.fiber_mass(ix, iy);
  return rho;
}

VectorField2D total_gauge_field(const DensityField& rho, const VlasovSetup& setup) {
  VectorField2D field;
  if (setup.beta != 0.0) {
    field = kernels::gauge_field(rho, setup.kernel);
    for (auto& v : field.comp_x) v *= setup.beta;
    for (auto& v : field.comp_y) v *= setup.beta;
  } else {
    field.grid = rho.grid;
    field.comp_x.assign(rho.grid.size(), 0.0);
    field.comp_y.assign(rho.grid.size(), 0.0);
  }
  for (int iy = 0; iy < rho.grid.ny; ++iy) {
    for (int ix = 0; ix < rho.grid.nx; ++ix) {
      const Vec2 a = setup.external_at({rho.grid.x(ix), rho.grid.y(iy)});
      field.comp_x[rho.grid.idx(ix, iy)] += a.x;
      field.comp_y[rho.grid.idx(ix, iy)] += a.y;
    }
  }
  return field;
}

PhaseSpaceDensity build_minimizer(const DensityField& rho, const VlasovSetup& setup,
                                  const Grid2D& p_grid) {
  if (!p_grid.cell_centered) throw InvalidInput("build_minimizer: p-grid must be cell-centered");
  const VectorField2D a_tot = total_gauge_field(rho, setup);

  PhaseSpaceDensity m;
  m.x_grid = rho.grid;
  m.p_grid = p_grid;
  m.fill = 1.0;
  m.balls.resize(rho.grid.size());

  const double box_x0 = p_grid.x0, box_x1 = p_grid.x0 + p_grid.nx * p_grid.h;
  const double box_y0 = p_grid.y0, box_y1 = p_grid.y0 + p_grid.ny * p_grid.h;
  const double slack = 1e-12 * std::max(1.0, box_x1 - box_x0);

  for (int iy = 0; iy < rho.grid.ny; ++iy) {
    for (int ix = 0; ix < rho.grid.nx; ++ix) {
      const std::size_t k = rho.grid.idx(ix, iy);
      PBall& ball = m.balls[k];
      ball.center = Vec2{-a_tot.comp_x[k], -a_tot.comp_y[k]};
      ball.radius = std::sqrt(4.0 * kPi * std::max(0.0, rho.values[k]));
      if (ball.radius > 0.0 &&
          (ball.center.x - ball.radius < box_x0 - slack ||
           ball.center.x + ball.radius > box_x1 + slack ||
           ball.center.y - ball.radius < box_y0 - slack ||
           ball.center.y + ball.radius > box_y1 + slack)) {
        throw NumericFailure("build_minimizer: momentum grid clips a minimizer disc; enlarge the p-box");
      }
    }
  }
  return m;
}

Grid2D fit_p_grid(const DensityField& rho, const VlasovSetup& setup, int nodes_per_axis,
                  double margin) {
  if (nodes_per_axis < 2) throw InvalidInput("fit_p_grid: need at least 2 nodes per axis");
  if (margin <= 1.0) throw InvalidInput("fit_p_grid: margin must exceed 1");
  const VectorField2D a_tot = total_gauge_field(rho, setup);

  double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < rho.values.size(); ++k) {
    const double r = std::sqrt(4.0 * kPi * std::max(0.0, rho.values[k]));
    if (r <= 0.0) continue;
    const double cx = -a_tot.comp_x[k], cy = -a_tot.comp_y[k];
    if (!any) {
      lo_x = cx - r; hi_x = cx + r; lo_y = cy - r; hi_y = cy + r;
      any = true;
    } else {
      lo_x = std::min(lo_x, cx - r); hi_x = std::max(hi_x, cx + r);
      lo_y = std::min(lo_y, cy - r); hi_y = std::max(hi_y, cy + r);
    }
  }
  if (!any) { lo_x = lo_y = -1.0; hi_x = hi_y = 1.0; }

  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  const double half = 0.5 * margin * std::max(hi_x - lo_x, hi_y - lo_y);

  Grid2D g;
  g.cell_centered = true;
  g.nx = g.ny = nodes_per_axis;
  g.h = 2.0 * half / nodes_per_axis;
  g.x0 = cx - half;
  g.y0 = cy - half;
  return g;
}

double vlasov_energy(const PhaseSpaceDensity& m, const VlasovSetup& setup) {
  validate_density(m);
  const DensityField rho = position_marginal(m);
  const VectorField2D a_tot = total_gauge_field(rho, setup);
  const Grid2D& xg = m.x_grid;
  const double x_cell = xg.h * xg.h;
  const double scale = 1.0 / (kTwoPi * kTwoPi);

  double kinetic = 0.0;
  if (m.ball_storage()) {
    for (std::size_t k = 0; k < m.balls.size(); ++k) {
      const PBall& ball = m.balls[k];
      if (ball.radius <= 0.0) continue;
      const double r2 = ball.radius * ball.radius;
      const Vec2 shift{ball.center.x + a_tot.comp_x[k], ball.center.y + a_tot.comp_y[k]};
      // int_{|p-c|<=r} |p + A|^2 dp = pi r^2 |c + A|^2 + pi r^4 / 2.
      kinetic += x_cell * m.fill * (kPi * r2 * shift.norm2() + 0.5 * kPi * r2 * r2);
    }
  } else {
    const double p_cell = m.p_grid.h * m.p_grid.h;
    for (int iy = 0; iy < xg.ny; ++iy) {
      for (int ix = 0; ix < xg.nx; ++ix) {
        const std::size_t k = xg.idx(ix, iy);
        const Vec2 a{a_tot.comp_x[k], a_tot.comp_y[k]};
        double node = 0.0;
        for (int ipy = 0; ipy < m.p_grid.ny; ++ipy) {
          for (int ipx = 0; ipx < m.p_grid.nx; ++ipx) {
            const Vec2 p{m.p_grid.x(ipx) + a.x, m.p_grid.y(ipy) + a.y};
            node += p.norm2() * m.dense[m.dense_index(ix, iy, ipx, ipy)];
          }
        }
        kinetic += x_cell * p_cell * node;
      }
    }
  }

  double potential = 0.0;
  for (int iy = 0; iy < xg.ny; ++iy)
    for (int ix = 0; ix < xg.nx; ++ix)
      potential += x_cell * setup.trap(Vec2{xg.x(ix), xg.y(iy)}) * rho.values[xg.idx(ix, iy)];

  return scale * kinetic + potential;
}

std::vector<double> momentum_distribution(const DensityField& rho, const VlasovSetup& setup,
                                          const std::vector<Vec2>& p_points) {
  const VectorField2D a_tot = total_gauge_field(rho, setup);
  const Grid2D& xg = rho.grid;
  if (!xg.cell_centered) throw InvalidInput("momentum_distribution: cell-centered x-grid required");
  const double x_cell = xg.h * xg.h;
  const std::size_t n = xg.size();

  std::vector<double> threshold(n);  // 4 pi rho(x)
  for (std::size_t k = 0; k < n; ++k) threshold[k] = 4.0 * kPi * std::max(0.0, rho.values[k]);

  std::vector<double> result(p_points.size(), 0.0);
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t ip = begin; ip < end; ++ip) {
      const Vec2 p = p_points[ip];
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (threshold[k] <= 0.0) continue;  // the fiber over a vacuum node is a point
        const double vx = p.x + a_tot.comp_x[k];
        const double vy = p.y + a_tot.comp_y[k];
        if (vx * vx + vy * vy <= threshold[k]) acc += x_cell;
      }
      result[ip] = acc;
    }
  };

  const int threads = std::min<int>(thread_count(), static_cast<int>(p_points.size()));
  if (threads <= 1) {
    worker(0, p_points.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (p_points.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(p_points.size(), begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return result;
}

PauliMassReport pauli_and_mass_report(const PhaseSpaceDensity& m) {
  validate_density(m);
  PauliMassReport report;
  const double slack = 1e-12;
  double mass = 0.0;
  double max_v = 0.0, min_v = 0.0;
  bool seen = false;
  const double x_cell = m.x_grid.h * m.x_grid.h;

  if (m.ball_storage()) {
    for (int iy = 0; iy < m.x_grid.ny; ++iy) {
      for (int ix = 0; ix < m.x_grid.nx; ++ix) {
        const PBall& ball = m.balls[m.x_grid.idx(ix, iy)];
        mass += x_cell * m.fill * kPi * ball.radius * ball.radius;
        for (int ipy = 0; ipy < m.p_grid.ny; ++ipy) {
          for (int ipx = 0; ipx < m.p_grid.nx; ++ipx) {
            const double v = m.fill * cell_fraction(m.p_grid, ipx, ipy, ball);
            if (!seen) { max_v = min_v = v; seen = true; }
            max_v = std::max(max_v, v);
            min_v = std::min(min_v, v);
            if (v < -slack || v > 1.0 + slack) ++report.violation_count;
          }
        }
      }
    }
  } else {
    const double p_cell = m.p_grid.h * m.p_grid.h;
    for (std::size_t k = 0; k < m.dense.size(); ++k) {
      const double v = m.dense[k];
      if (!seen) { max_v = min_v = v; seen = true; }
      max_v = std::max(max_v, v);
      min_v = std::min(min_v, v);
      if (v < -slack || v > 1.0 + slack) ++report.violation_count;
      mass += v * x_cell * p_cell;
    }
  }

  report.max_value = max_v;
  report.min_value = min_v;
  report.mass_ratio = mass / (kTwoPi * kTwoPi);
  return report;
}

}  // namespace anyv::vlasov
