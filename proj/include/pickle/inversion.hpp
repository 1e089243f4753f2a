#ifndef PICKLE_INVERSION_HPP
#define PICKLE_INVERSION_HPP

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "pickle/fv.hpp"
#include "pickle/kle.hpp"

namespace pickle {

enum class Optimizer { GaussNewton, Lbfgs };

struct InversionConfig {
  double gamma = 1e-6;    // l2 coefficient penalty
  int max_iters = 200;
  double grad_tol = 1e-8;
  int n_xi = 100;
  int n_eta = 100;
  Optimizer optimizer = Optimizer::GaussNewton;

  void validate() const;
};

struct InversionResult {
  Eigen::VectorXd xi;     // estimated y-expansion coefficients
  Eigen::VectorXd eta;    // estimated u-expansion coefficients
  Eigen::VectorXd y_est;  // field reconstructed from xi
  Eigen::VectorXd u_est;  // field reconstructed from eta
  std::vector<double> objective_history;
  bool converged = false;
  double final_grad_norm = 0.0;
};

/// Differentiable map from expansion coefficients to the log-diffusion
/// field; the linear cKLE case and the latent logistic chain both fit here.
struct FieldParameterization {
  int dim = 0;
  // y(xi)
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
  // dy/dxi as a dense N x dim matrix evaluated at xi
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

FieldParameterization linear_parameterization(const Ckle& y_ckle);

/// Minimizes ||r[u(eta), y(xi)]||^2 + gamma (||xi||^2 + ||eta||^2) over the
/// stacked coefficients, Gauss-Newton with backtracking by default.
InversionResult invert(const Ckle& y_ckle, const Ckle& u_ckle, const ResidualOperator& op,
                       const InversionConfig& cfg);

/// Same minimization through an arbitrary y-parameterization.  `reconstruct`
/// gives the reported y_est (handy when xi parameterizes a latent field).
InversionResult invert_parameterized(const FieldParameterization& y_param,
                                     const Ckle& u_ckle, const ResidualOperator& op,
                                     const InversionConfig& cfg);

/// Objective and gradient at (xi, eta); gradient is stacked [d/dxi; d/deta].
std::pair<double, Eigen::VectorXd> objective_and_gradient(
    const Ckle& y_ckle, const Ckle& u_ckle, const ResidualOperator& op, double gamma,
    const Eigen::VectorXd& xi, const Eigen::VectorXd& eta);

}  // namespace pickle

#endif
