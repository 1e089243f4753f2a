#include "pickle/fv.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace pickle {

namespace {

void check_field(const Eigen::VectorXd& v, int n, const char* name) {
  if (v.size() != n) throw std::invalid_argument(std::string(name) + ": wrong length");
  if (!v.allFinite()) throw std::invalid_argument(std::string(name) + ": non-finite entries");
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

// Transmissibility-weighted stencil assembly shared by assemble() and the
// y-Jacobian.  `emit(row, col, dval)` receives matrix contributions and
// `emit_rhs(row, val)` the Dirichlet right-hand side.
template <typename EmitMat, typename EmitRhs>
void for_each_flux(const Grid& g, const Eigen::VectorXd& k, EmitMat&& emit,
                   EmitRhs&& emit_rhs) {
  const double tx = g.hy / g.hx;  // face area / center distance, x-faces
  const double ty = g.hx / g.hy;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int c = g.linear_index(i, j);
      if (i + 1 < g.nx) {  // interior x-face (c, right)
        const int r = g.linear_index(i + 1, j);
        const double t = tx * harmonic(k[c], k[r]);
        emit(c, c, t);
        emit(c, r, -t);
        emit(r, r, t);
        emit(r, c, -t);
      }
      if (j + 1 < g.ny) {  // interior y-face (c, top)
        const int r = g.linear_index(i, j + 1);
        const double t = ty * harmonic(k[c], k[r]);
        emit(c, c, t);
        emit(c, r, -t);
        emit(r, r, t);
        emit(r, c, -t);
      }
      if (i == 0) {  // Dirichlet u = 1, half-cell distance
        const double t = 2.0 * tx * k[c];
        emit(c, c, t);
        emit_rhs(c, t * 1.0);
      }
      if (i == g.nx - 1) {  // Dirichlet u = 0
        const double t = 2.0 * tx * k[c];
        emit(c, c, t);
      }
      // x2 faces at j = 0 and j = ny-1 carry zero flux: no contribution.
    }
  }
}

}  // namespace

ResidualOperator::ResidualOperator(Grid g) : grid(std::move(g)) {
  residual_cells.resize(grid.num_cells());
  for (int kk = 0; kk < grid.num_cells(); ++kk) residual_cells[kk] = kk;
}

ResidualOperator::ResidualOperator(Grid g, std::vector<int> cells)
    : grid(std::move(g)), residual_cells(std::move(cells)) {
  if (residual_cells.empty())
    throw std::invalid_argument("ResidualOperator: residual_cells empty");
  for (std::size_t i = 0; i < residual_cells.size(); ++i) {
    if (residual_cells[i] < 0 || residual_cells[i] >= grid.num_cells())
      throw std::invalid_argument("ResidualOperator: cell index out of range");
    if (i > 0 && residual_cells[i] <= residual_cells[i - 1])
      throw std::invalid_argument("ResidualOperator: cells must be strictly increasing");
  }
}

FvSystem assemble(const ResidualOperator& op, const Eigen::VectorXd& y) {
  const int n = op.grid.num_cells();
  check_field(y, n, "assemble: y");
  const Eigen::VectorXd k = y.array().exp();

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(5 * n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for_each_flux(
      op.grid, k,
      [&](int r, int c, double v) { triplets.emplace_back(r, c, v); },
      [&](int r, double v) { rhs[r] += v; });

  FvSystem sys;
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.rhs = std::move(rhs);
  return sys;
}

struct ForwardSolver::Impl {
  ResidualOperator op;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt;
  bool analyzed = false;

  explicit Impl(ResidualOperator o) : op(std::move(o)) {}

  Eigen::VectorXd run(const Eigen::VectorXd& y) {
    FvSystem sys = assemble(op, y);
    if (!analyzed) {
      llt.analyzePattern(sys.matrix);
      analyzed = true;
    }
    llt.factorize(sys.matrix);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd u = llt.solve(sys.rhs);
      const double rel = (sys.matrix * u - sys.rhs).norm() / sys.rhs.norm();
      if (rel <= 1e-10) return u;
    }
    // CG fallback; A is SPD so breakdown here indicates pathological y.
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20 * op.grid.num_cells());
    cg.compute(sys.matrix);
    Eigen::VectorXd u = cg.solve(sys.rhs);
    const double rel = (sys.matrix * u - sys.rhs).norm() / sys.rhs.norm();
    if (rel > 1e-10)
      throw std::runtime_error("solve: linear solver breakdown, relative residual " +
                               std::to_string(rel) + ", cg iterations " +
                               std::to_string(cg.iterations()));
    return u;
  }
};

ForwardSolver::ForwardSolver(const ResidualOperator& op)
    : impl_(std::make_shared<Impl>(op)) {}

Eigen::VectorXd ForwardSolver::solve(const Eigen::VectorXd& y) { return impl_->run(y); }

Eigen::VectorXd solve(const ResidualOperator& op, const Eigen::VectorXd& y) {
  return ForwardSolver(op).solve(y);
}

Eigen::VectorXd residual(const ResidualOperator& op, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& y) {
  const int n = op.grid.num_cells();
  check_field(u, n, "residual: u");
  FvSystem sys = assemble(op, y);
  const Eigen::VectorXd full = sys.matrix * u - sys.rhs;
  Eigen::VectorXd out(op.num_residuals());
  for (int i = 0; i < op.num_residuals(); ++i) out[i] = full[op.residual_cells[i]];
  return out;
}

ResidualJacobians residual_jacobians(const ResidualOperator& op, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& y) {
  const int n = op.grid.num_cells();
  check_field(u, n, "residual_jacobians: u");
  check_field(y, n, "residual_jacobians: y");
  const Eigen::VectorXd k = y.array().exp();

  // Row map: full cell index -> restricted row, or -1.
  std::vector<int> row_of(n, -1);
  for (int i = 0; i < op.num_residuals(); ++i) row_of[op.residual_cells[i]] = i;

  std::vector<Eigen::Triplet<double>> ju, jy;
  ju.reserve(5 * op.num_residuals());
  jy.reserve(5 * op.num_residuals());

  // dr/du restricted rows of A(y); dr/dy differentiates the transmissibilities.
  // For an interior face (c, r): T = geom * 2 k_c k_r / (k_c + k_r),
  //   dT/dy_c = T * k_r / (k_c + k_r), dT/dy_r = T * k_c / (k_c + k_r)
  // (using d k / d y = k).  Dirichlet faces: T = geom * 2 k_c, dT/dy_c = T.
  const Grid& g = op.grid;
  const double tx = g.hy / g.hx;
  const double ty = g.hx / g.hy;

  auto add_face = [&](int c, int r, double t) {
    // contributions of one interior face to rows c and r
    const double dt_dyc = t * k[r] / (k[c] + k[r]);
    const double dt_dyr = t * k[c] / (k[c] + k[r]);
    const double du = u[c] - u[r];
    if (row_of[c] >= 0) {
      ju.emplace_back(row_of[c], c, t);
      ju.emplace_back(row_of[c], r, -t);
      jy.emplace_back(row_of[c], c, dt_dyc * du);
      jy.emplace_back(row_of[c], r, dt_dyr * du);
    }
    if (row_of[r] >= 0) {
      ju.emplace_back(row_of[r], r, t);
      ju.emplace_back(row_of[r], c, -t);
      jy.emplace_back(row_of[r], c, -dt_dyc * du);
      jy.emplace_back(row_of[r], r, -dt_dyr * du);
    }
  };

  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int c = g.linear_index(i, j);
      if (i + 1 < g.nx) add_face(c, g.linear_index(i + 1, j), tx * harmonic(k[c], k[c + 1]));
      if (j + 1 < g.ny) add_face(c, g.linear_index(i, j + 1), ty * harmonic(k[c], k[c + g.nx]));
      if (row_of[c] >= 0) {
        if (i == 0) {  // r_c += T (u_c - 1), T = 2 tx k_c
          const double t = 2.0 * tx * k[c];
          ju.emplace_back(row_of[c], c, t);
          jy.emplace_back(row_of[c], c, t * (u[c] - 1.0));
        }
        if (i == g.nx - 1) {  // r_c += T u_c
          const double t = 2.0 * tx * k[c];
          ju.emplace_back(row_of[c], c, t);
          jy.emplace_back(row_of[c], c, t * u[c]);
        }
      }
    }
  }

  ResidualJacobians jac;
  jac.wrt_u.resize(op.num_residuals(), n);
  jac.wrt_u.setFromTriplets(ju.begin(), ju.end());
  jac.wrt_y.resize(op.num_residuals(), n);
  jac.wrt_y.setFromTriplets(jy.begin(), jy.end());
  return jac;
}

ResidualOperator subsample_residuals(const ResidualOperator& op, int factor) {
  if (factor < 1) throw std::invalid_argument("subsample_residuals: factor must be positive");
  if (op.grid.nx % factor != 0 || op.grid.ny % factor != 0)
    throw std::invalid_argument("subsample_residuals: factor must divide nx and ny");
  std::vector<int> cells;
  cells.reserve(op.grid.num_cells() / (factor * factor));
  for (int j = 0; j < op.grid.ny; j += factor)
    for (int i = 0; i < op.grid.nx; i += factor)
      cells.push_back(op.grid.linear_index(i, j));
  return ResidualOperator(op.grid, std::move(cells));
}

}  // namespace pickle
