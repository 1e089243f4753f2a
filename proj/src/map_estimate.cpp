#include "pickle/map_estimate.hpp"

#include <Eigen/SparseCholesky>
#include <stdexcept>

#include "pickle/optim.hpp"

namespace pickle {

void MapConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("MapConfig: gamma must be positive");
  if (max_iters < 1 || !(grad_tol > 0.0))
    throw std::invalid_argument("MapConfig: bad iteration controls");
}

namespace {

// H1 penalty: cell-area-weighted squared forward differences,
//   R(y) = hx hy [ sum ((y_E - y_C)/hx)^2 + sum ((y_N - y_C)/hy)^2 ],
// accumulated over interior faces only.  Returns R and adds dR/dy to grad.
double h1_penalty(const Grid& g, const Eigen::VectorXd& y, Eigen::VectorXd& grad,
                  double weight) {
  const double wx = weight * g.hy / g.hx;  // (hx hy)/hx^2
  const double wy = weight * g.hx / g.hy;
  double value = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int c = g.linear_index(i, j);
      if (i + 1 < g.nx) {
        const double d = y[c + 1] - y[c];
        value += wx * d * d;
        grad[c + 1] += 2.0 * wx * d;
        grad[c] -= 2.0 * wx * d;
      }
      if (j + 1 < g.ny) {
        const double d = y[c + g.nx] - y[c];
        value += wy * d * d;
        grad[c + g.nx] += 2.0 * wy * d;
        grad[c] -= 2.0 * wy * d;
      }
    }
  return value;
}

}  // namespace

std::pair<double, Eigen::VectorXd> map_objective_and_gradient(
    const ObservationSet& y_obs, const ObservationSet& u_obs, const ResidualOperator& op,
    const MapConfig& cfg, const Eigen::VectorXd& y) {
  const int n = op.grid.num_cells();
  const std::vector<int> y_cells = observation_cells(op.grid, y_obs);
  const std::vector<int> u_cells = observation_cells(op.grid, u_obs);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  double objective = h1_penalty(op.grid, y, grad, cfg.gamma);

  for (int a = 0; a < y_obs.size(); ++a) {
    const double d = y[y_cells[a]] - y_obs.values[a];
    objective += d * d;
    grad[y_cells[a]] += 2.0 * d;
  }

  if (u_obs.size() > 0) {
    const FvSystem sys = assemble(op, y);
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(sys.matrix);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("map_invert: forward factorization failed");
    const Eigen::VectorXd u = llt.solve(sys.rhs);

    Eigen::VectorXd mis = Eigen::VectorXd::Zero(n);  // P^T (P u - u_s), lifted
    for (int a = 0; a < u_obs.size(); ++a) {
      const double d = u[u_cells[a]] - u_obs.values[a];
      objective += d * d;
      mis[u_cells[a]] += 2.0 * d;
    }
    // Adjoint solve (A is symmetric), then chain through dr/dy at fixed u:
    //   dJ_u/dy = -(dr/dy)^T lambda with A lambda = P^T 2 (P u - u_s).
    const Eigen::VectorXd lambda = llt.solve(mis);
    ResidualOperator full(op.grid);
    const ResidualJacobians rj = residual_jacobians(full, u, y);
    grad -= rj.wrt_y.transpose() * lambda;
  }
  return {objective, grad};
}

MapResult map_invert(const ObservationSet& y_obs, const ObservationSet& u_obs,
                     const ResidualOperator& op, const MapConfig& cfg) {
  cfg.validate();
  y_obs.validate();
  u_obs.validate();

  MapResult result;
  optim::LbfgsOptions lopts;
  lopts.max_iters = cfg.max_iters;
  lopts.grad_tol = cfg.grad_tol;
  lopts.on_accept = [&](int, double fx) { result.objective_history.push_back(fx); };

  const auto objective = [&](const Eigen::VectorXd& y, Eigen::VectorXd& grad) {
    auto [value, g] = map_objective_and_gradient(y_obs, u_obs, op, cfg, y);
    grad = std::move(g);
    return value;
  };

  const int n = op.grid.num_cells();
  const optim::LbfgsResult r = optim::minimize_lbfgs(objective, Eigen::VectorXd::Zero(n), lopts);

  result.y_est = r.x;
  result.u_est = solve(op, result.y_est);
  result.converged = r.converged;
  result.final_grad_norm = r.grad_norm;
  return result;
}

}  // namespace pickle
