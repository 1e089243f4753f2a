#include "pickle/optim.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace pickle::optim {

namespace {

bool has_bounds(const LbfgsOptions& opts) { return opts.lower.size() > 0; }

Eigen::VectorXd project(const Eigen::VectorXd& x, const LbfgsOptions& opts) {
  if (!has_bounds(opts)) return x;
  return x.cwiseMax(opts.lower).cwiseMin(opts.upper);
}

// Active-set signature used to decide when the quasi-Newton memory is stale.
std::vector<int> active_set(const Eigen::VectorXd& x, const LbfgsOptions& opts) {
  std::vector<int> a;
  if (!has_bounds(opts)) return a;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] <= opts.lower[i] || x[i] >= opts.upper[i]) a.push_back(static_cast<int>(i));
  return a;
}

}  // namespace

LbfgsResult minimize_lbfgs(const ObjectiveFn& objective, const Eigen::VectorXd& x0,
                           const LbfgsOptions& opts) {
  if (has_bounds(opts) &&
      (opts.lower.size() != x0.size() || opts.upper.size() != x0.size()))
    throw std::invalid_argument("minimize_lbfgs: bound size mismatch");

  LbfgsResult res;
  Eigen::VectorXd x = project(x0, opts);
  Eigen::VectorXd grad(x.size());
  double fx = objective(x, grad);
  if (!std::isfinite(fx))
    throw std::runtime_error("minimize_lbfgs: objective not finite at start");

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> memory;
  std::vector<int> active = active_set(x, opts);

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= opts.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(memory.size());
    for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
      alpha[i] = memory[i].rho * memory[i].s.dot(q);
      q -= alpha[i] * memory[i].y;
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const double beta = memory[i].rho * memory[i].y.dot(q);
      q += (alpha[i] - beta) * memory[i].s;
    }
    Eigen::VectorXd direction = -q;
    if (direction.dot(grad) >= 0.0) direction = -grad;  // safeguard

    // Armijo backtracking along the (projected) direction.
    double step = 1.0;
    const double slope = direction.dot(grad);
    Eigen::VectorXd x_new, grad_new(x.size());
    double fx_new = fx;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_search; ++ls) {
      x_new = project(x + step * direction, opts);
      fx_new = objective(x_new, grad_new);
      const double predicted = has_bounds(opts)
                                   ? grad.dot(x_new - x)  // projected-step slope
                                   : step * slope;
      if (std::isfinite(fx_new) && fx_new <= fx + opts.armijo_c1 * predicted &&
          (x_new - x).norm() > 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.message = "line search failed";
      break;
    }

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd ydiff = grad_new - grad;
    const double sy = s.dot(ydiff);

    std::vector<int> active_new = active_set(x_new, opts);
    if (active_new != active) {
      memory.clear();  // curvature pairs straddling a bound are unreliable
      active = std::move(active_new);
    } else if (sy > 1e-12 * s.norm() * ydiff.norm()) {
      memory.push_back({std::move(s), std::move(ydiff), 1.0 / sy});
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }

    const double step_size = (x_new - x).norm();
    x = std::move(x_new);
    fx = fx_new;
    grad = std::move(grad_new);
    res.iterations = iter + 1;
    if (opts.on_accept) opts.on_accept(iter, fx);
    if (step_size <= opts.step_tol * (1.0 + x.norm())) {
      res.message = "step tolerance reached";
      break;
    }
  }

  if (res.message.empty()) res.message = "max iterations reached";
  res.x = std::move(x);
  res.fx = fx;
  res.grad_norm = grad.lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace pickle::optim
