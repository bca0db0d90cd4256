#pragma once

// Uniform square-cell 2D grids and the scalar/complex/vector fields living on
// them. Two node layouts share one type:
//   - cell-centered: nodes at cell centers, weight h^2 everywhere (midpoint
//     rule); the box is [x0, x0 + nx*h] x [y0, y0 + ny*h];
//   - vertex: nodes on a closed lattice including the box edges, trapezoid
//     weights (half weight per boundary axis).

#include <cstddef>
#include <vector>

#include "anyonvlasov/common.hpp"

namespace anyv {

struct Grid2D {
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 1.0;
  int nx = 0;
  int ny = 0;
  bool cell_centered = true;

  // Cell-centered grid of n x n cells covering [-half_width, half_width]^2.
  static Grid2D centered_cells(double half_width, int n) {
    return {-half_width, -half_width, 2.0 * half_width / n, n, n, true};
  }
  // Vertex grid of n x n nodes spanning [-half_width, half_width]^2.
  static Grid2D vertex_box(double half_width, int n) {
    return {-half_width, -half_width, 2.0 * half_width / (n - 1), n, n, false};
  }

  double x(int i) const { return cell_centered ? x0 + (i + 0.5) * h : x0 + i * h; }
  double y(int j) const { return cell_centered ? y0 + (j + 0.5) * h : y0 + j * h; }
  Vec2 node(int i, int j) const { return {x(i), y(j)}; }

  double weight_x(int i) const {
    if (cell_centered) return h;
    return (i == 0 || i == nx - 1) ? 0.5 * h : h;
  }
  double weight_y(int j) const {
    if (cell_centered) return h;
    return (j == 0 || j == ny - 1) ? 0.5 * h : h;
  }
  double weight(int i, int j) const { return weight_x(i) * weight_y(j); }

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

  double xmin() const { return x0; }
  double ymin() const { return y0; }
  double xmax() const { return cell_centered ? x0 + nx * h : x0 + (nx - 1) * h; }
  double ymax() const { return cell_centered ? y0 + ny * h : y0 + (ny - 1) * h; }

  bool same_layout(const Grid2D& o) const {
    return x0 == o.x0 && y0 == o.y0 && h == o.h && nx == o.nx && ny == o.ny &&
           cell_centered == o.cell_centered;
  }
};

// Nonnegative scalar density sampled on grid nodes.
struct DensityField {
  Grid2D grid;
  std::vector<double> values;

  double at(int i, int j) const { return values[grid.idx(i, j)]; }
  double& at(int i, int j) { return values[grid.idx(i, j)]; }

  double mass() const {
    double m = 0.0;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) m += values[grid.idx(i, j)] * grid.weight(i, j);
    return m;
  }
};

// Two-component real vector field on grid nodes (gauge potentials).
struct VectorField2D {
  Grid2D grid;
  std::vector<double> comp_x;
  std::vector<double> comp_y;

  Vec2 at(int i, int j) const {
    const std::size_t k = grid.idx(i, j);
    return {comp_x[k], comp_y[k]};
  }
};

}  // namespace anyv
