#ifndef PICKLE_FV_HPP
#define PICKLE_FV_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <memory>
#include <vector>

#include "pickle/grid.hpp"

namespace pickle {

/// Cell-centered two-point-flux discretization of
///   div(exp(y) grad u) = 0   on [0,1]^2,
///   u = 1 at x1 = 0,  u = 0 at x1 = 1,  zero flux at x2 in {0,1}.
/// Face transmissibilities use the harmonic mean of exp(y); Dirichlet faces
/// use the half-cell distance, which keeps the system SPD and the y = 0
/// solution exactly linear.
///
/// `residual_cells` selects the rows reported by residual() and
/// residual_jacobians(); assemble() and solve() always act on all N cells.
struct ResidualOperator {
  Grid grid;
  std::vector<int> residual_cells;  // strictly increasing, subset of [0, N)

  explicit ResidualOperator(Grid g);
  ResidualOperator(Grid g, std::vector<int> cells);

  int num_residuals() const { return static_cast<int>(residual_cells.size()); }
};

struct FvSystem {
  Eigen::SparseMatrix<double> matrix;  // N x N, SPD
  Eigen::VectorXd rhs;                 // N
};

/// Full system A(y) u = b(y).
FvSystem assemble(const ResidualOperator& op, const Eigen::VectorXd& y);

/// Solves A(y) u = b(y) by sparse Cholesky (CG fallback), relative residual
/// <= 1e-10.
Eigen::VectorXd solve(const ResidualOperator& op, const Eigen::VectorXd& y);

/// Rows of A(y) u - b(y) restricted to residual_cells.
Eigen::VectorXd residual(const ResidualOperator& op, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& y);

struct ResidualJacobians {
  Eigen::SparseMatrix<double> wrt_u;  // |residual_cells| x N
  Eigen::SparseMatrix<double> wrt_y;  // |residual_cells| x N
};

/// Analytic derivatives of the restricted residual with respect to u and y.
ResidualJacobians residual_jacobians(const ResidualOperator& op, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& y);

/// Residual rows kept only at cells whose (i, j) indices are both multiples
/// of `factor`; factor must divide nx and ny.
ResidualOperator subsample_residuals(const ResidualOperator& op, int factor);

/// Reusable forward solver: the sparsity pattern is analyzed once, repeated
/// solves only refactorize.  Not thread-safe; use one per thread.
class ForwardSolver {
 public:
  explicit ForwardSolver(const ResidualOperator& op);
  Eigen::VectorXd solve(const Eigen::VectorXd& y);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace pickle

#endif
