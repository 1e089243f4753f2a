#ifndef PICKLE_MAP_ESTIMATE_HPP
#define PICKLE_MAP_ESTIMATE_HPP

#include <Eigen/Core>

#include "pickle/fv.hpp"
#include "pickle/gpr.hpp"

namespace pickle {

struct MapConfig {
  double gamma = 1e-6;  // H1 regularization weight
  int max_iters = 1000;
  double grad_tol = 1e-8;

  void validate() const;
};

struct MapResult {
  Eigen::VectorXd y_est;
  Eigen::VectorXd u_est;  // forward solve at y_est
  std::vector<double> objective_history;
  bool converged = false;
  double final_grad_norm = 0.0;
};

/// Gradient-regularized least-squares estimate over the grid values of y:
///   min_y ||u(y; X_u) - u_s||^2 + ||y(X_y) - y_s||^2 + gamma ||grad y||^2
/// with u(y) the exact forward solve.  The u-misfit gradient comes from the
/// discrete adjoint of A(y) u = b(y); the H1 term is forward differences
/// with cell-area weighting (boundary differences omitted).  L-BFGS from
/// y = 0.
MapResult map_invert(const ObservationSet& y_obs, const ObservationSet& u_obs,
                     const ResidualOperator& op, const MapConfig& cfg);

/// Objective and gradient used by map_invert, exposed for verification.
std::pair<double, Eigen::VectorXd> map_objective_and_gradient(
    const ObservationSet& y_obs, const ObservationSet& u_obs, const ResidualOperator& op,
    const MapConfig& cfg, const Eigen::VectorXd& y);

}  // namespace pickle

#endif
