#ifndef PICKLE_OPTIM_HPP
#define PICKLE_OPTIM_HPP

#include <Eigen/Core>
#include <functional>
#include <string>

namespace pickle::optim {

/// Objective callback: fills `grad` (same size as x) and returns f(x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_iters = 500;
  int memory = 10;
  double grad_tol = 1e-8;        // stop when ||grad||_inf <= grad_tol
  double step_tol = 1e-14;       // stop when relative step is negligible
  double armijo_c1 = 1e-4;
  int max_line_search = 40;
  // Optional box constraints, enforced by projection; empty = unconstrained.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  // Invoked once per accepted step with the new objective value.
  std::function<void(int iter, double fx)> on_accept;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double fx = 0.0;
  double grad_norm = 0.0;  // ||grad||_inf at the final iterate
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Limited-memory BFGS with Armijo backtracking.  With bounds set, steps are
/// projected onto the box and the curvature memory is dropped whenever the
/// active set changes.
LbfgsResult minimize_lbfgs(const ObjectiveFn& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& opts = {});

}  // namespace pickle::optim

#endif
