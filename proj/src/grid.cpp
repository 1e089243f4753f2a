#include "pickle/grid.hpp"

#include <limits>
#include <stdexcept>

namespace pickle {

Grid build_grid(int nx, int ny) {
  if (nx < 2 || ny < 2)
    throw std::invalid_argument("build_grid: need nx >= 2 and ny >= 2");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.hx = 1.0 / nx;
  g.hy = 1.0 / ny;
  g.centers.resize(nx * ny, 2);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int k = j * nx + i;
      g.centers(k, 0) = (i + 0.5) * g.hx;
      g.centers(k, 1) = (j + 0.5) * g.hy;
    }
  return g;
}

int nearest_cell(const Grid& grid, const Eigen::Vector2d& point) {
  if (point.x() < 0.0 || point.x() > 1.0 || point.y() < 0.0 || point.y() > 1.0)
    throw std::invalid_argument("nearest_cell: point outside [0,1]^2");
  // N is small; a scan keeps the smallest-index tie rule exact.
  int best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid.num_cells(); ++k) {
    const double d2 = (grid.centers.row(k).transpose() - point).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

}  // namespace pickle
