#ifndef PICKLE_GRID_HPP
#define PICKLE_GRID_HPP

#include <Eigen/Core>

namespace pickle {

/// Uniform cell-centered discretization of the unit square.
///
/// Cells are indexed row-major: cell (i, j) has linear index k = j*nx + i,
/// with center ((i+0.5)*hx, (j+0.5)*hy).  The layout is shared by every
/// covariance matrix, mode matrix, and FV operator in the library.
struct Grid {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;
  Eigen::MatrixX2d centers;  // N x 2, N = nx*ny

  int num_cells() const { return nx * ny; }
  double cell_area() const { return hx * hy; }
  int linear_index(int i, int j) const { return j * nx + i; }
};

/// Builds an nx-by-ny grid on [0,1]^2.  Requires nx, ny >= 2 so that both
/// Dirichlet faces carry at least one cell.
Grid build_grid(int nx, int ny);

/// Index of the cell whose center is closest to `point` (Euclidean
/// distance), ties broken by smallest linear index.  `point` must lie in
/// the closed unit square.
int nearest_cell(const Grid& grid, const Eigen::Vector2d& point);

}  // namespace pickle

#endif
