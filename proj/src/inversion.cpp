#include "pickle/inversion.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

#include "pickle/optim.hpp"

namespace pickle {

void InversionConfig::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("InversionConfig: gamma must be positive");
  if (max_iters < 1 || !(grad_tol > 0.0))
    throw std::invalid_argument("InversionConfig: bad iteration controls");
  if (n_xi < 1 || n_eta < 1)
    throw std::invalid_argument("InversionConfig: mode counts must be positive");
}

FieldParameterization linear_parameterization(const Ckle& y_ckle) {
  FieldParameterization p;
  p.dim = y_ckle.num_terms();
  p.value = [&y_ckle](const Eigen::VectorXd& xi) { return evaluate(y_ckle, xi); };
  p.jacobian = [&y_ckle](const Eigen::VectorXd&) { return y_ckle.modes; };
  return p;
}

namespace {

struct Evaluation {
  double objective = 0.0;
  Eigen::VectorXd res;       // restricted residual
  Eigen::MatrixXd jac;       // n_r x (n_xi + n_eta)
  Eigen::VectorXd gradient;  // 2 (J^T r + gamma p)
};

// Residual and derivatives of the penalized least-squares objective at the
// stacked parameter vector p = [xi; eta].
Evaluation evaluate_point(const FieldParameterization& y_param, const Ckle& u_ckle,
                          const ResidualOperator& op, double gamma,
                          const Eigen::VectorXd& p, bool with_jacobian) {
  const int n_xi = y_param.dim;
  const int n_eta = u_ckle.num_terms();
  const Eigen::VectorXd xi = p.head(n_xi);
  const Eigen::VectorXd eta = p.tail(n_eta);

  const Eigen::VectorXd y = y_param.value(xi);
  const Eigen::VectorXd u = evaluate(u_ckle, eta);

  Evaluation ev;
  ev.res = residual(op, u, y);
  ev.objective = ev.res.squaredNorm() + gamma * p.squaredNorm();
  if (!with_jacobian) return ev;

  const ResidualJacobians rj = residual_jacobians(op, u, y);
  ev.jac.resize(ev.res.size(), n_xi + n_eta);
  ev.jac.leftCols(n_xi) = rj.wrt_y * y_param.jacobian(xi);
  ev.jac.rightCols(n_eta) = rj.wrt_u * u_ckle.modes;
  ev.gradient = 2.0 * (ev.jac.transpose() * ev.res + gamma * p);
  return ev;
}

InversionResult run_gauss_newton(const FieldParameterization& y_param, const Ckle& u_ckle,
                                 const ResidualOperator& op, const InversionConfig& cfg) {
  const int dim = y_param.dim + u_ckle.num_terms();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(dim);
  Evaluation ev = evaluate_point(y_param, u_ckle, op, cfg.gamma, p, true);

  InversionResult result;
  result.objective_history.push_back(ev.objective);

  double lm_damping = 0.0;
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    result.final_grad_norm = ev.gradient.norm();
    if (result.final_grad_norm <= cfg.grad_tol) {
      result.converged = true;
      break;
    }

    // Normal equations of the damped penalized least-squares step:
    //   (J^T J + (gamma + mu) I) dp = -(J^T r + gamma p)
    Eigen::MatrixXd normal = ev.jac.transpose() * ev.jac;
    const Eigen::VectorXd rhs = -(ev.jac.transpose() * ev.res + cfg.gamma * p);

    bool accepted = false;
    for (int damp_round = 0; damp_round < 12 && !accepted; ++damp_round) {
      Eigen::MatrixXd system = normal;
      system.diagonal().array() += cfg.gamma + lm_damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
      if (ldlt.info() != Eigen::Success) {
        lm_damping = std::max(1e-8, lm_damping * 10.0);
        continue;
      }
      const Eigen::VectorXd dp = ldlt.solve(rhs);

      double step = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        const Eigen::VectorXd trial = p + step * dp;
        Evaluation trial_ev = evaluate_point(y_param, u_ckle, op, cfg.gamma, trial, false);
        if (!std::isfinite(trial_ev.objective))
          throw std::runtime_error("invert: non-finite objective during line search");
        if (trial_ev.objective <= ev.objective - 1e-12 * std::abs(ev.objective)) {
          p = trial;
          ev = evaluate_point(y_param, u_ckle, op, cfg.gamma, p, true);
          accepted = true;
          lm_damping *= 0.25;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) lm_damping = std::max(1e-8, lm_damping * 10.0);
    }
    if (!accepted) break;  // stalled: damping saturated without descent
    result.objective_history.push_back(ev.objective);
  }
  result.final_grad_norm = ev.gradient.norm();
  if (!result.converged) result.converged = result.final_grad_norm <= cfg.grad_tol;

  result.xi = p.head(y_param.dim);
  result.eta = p.tail(u_ckle.num_terms());
  return result;
}

InversionResult run_lbfgs(const FieldParameterization& y_param, const Ckle& u_ckle,
                          const ResidualOperator& op, const InversionConfig& cfg) {
  const int dim = y_param.dim + u_ckle.num_terms();
  InversionResult result;

  optim::LbfgsOptions lopts;
  lopts.max_iters = cfg.max_iters;
  lopts.grad_tol = cfg.grad_tol;
  lopts.on_accept = [&](int, double fx) { result.objective_history.push_back(fx); };
  const auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd& grad) {
    Evaluation ev = evaluate_point(y_param, u_ckle, op, cfg.gamma, p, true);
    grad = ev.gradient;
    return ev.objective;
  };
  const optim::LbfgsResult r = optim::minimize_lbfgs(objective, Eigen::VectorXd::Zero(dim), lopts);

  result.converged = r.converged;
  result.final_grad_norm = r.grad_norm;
  result.xi = r.x.head(y_param.dim);
  result.eta = r.x.tail(u_ckle.num_terms());
  return result;
}

}  // namespace

InversionResult invert_parameterized(const FieldParameterization& y_param,
                                     const Ckle& u_ckle, const ResidualOperator& op,
                                     const InversionConfig& cfg) {
  cfg.validate();
  if (y_param.dim < 1) throw std::invalid_argument("invert: empty y parameterization");

  InversionResult result = (cfg.optimizer == Optimizer::GaussNewton)
                               ? run_gauss_newton(y_param, u_ckle, op, cfg)
                               : run_lbfgs(y_param, u_ckle, op, cfg);
  result.y_est = y_param.value(result.xi);
  result.u_est = evaluate(u_ckle, result.eta);
  return result;
}

InversionResult invert(const Ckle& y_ckle, const Ckle& u_ckle, const ResidualOperator& op,
                       const InversionConfig& cfg) {
  if (y_ckle.num_terms() != cfg.n_xi || u_ckle.num_terms() != cfg.n_eta)
    throw std::invalid_argument("invert: expansion term counts do not match config");
  return invert_parameterized(linear_parameterization(y_ckle), u_ckle, op, cfg);
}

std::pair<double, Eigen::VectorXd> objective_and_gradient(
    const Ckle& y_ckle, const Ckle& u_ckle, const ResidualOperator& op, double gamma,
    const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
  const FieldParameterization y_param = linear_parameterization(y_ckle);
  Eigen::VectorXd p(xi.size() + eta.size());
  p << xi, eta;
  Evaluation ev = evaluate_point(y_param, u_ckle, op, gamma, p, true);
  return {ev.objective, ev.gradient};
}

}  // namespace pickle
