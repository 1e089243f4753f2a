#include "pickle/gpr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pickle/optim.hpp"
#include "pickle/rng.hpp"

namespace pickle {

void ObservationSet::validate() const {
  const auto n = values.size();
  if (locations.rows() != n)
    throw std::invalid_argument("ObservationSet: locations/values size mismatch");
  if (noise_cov.rows() != n || noise_cov.cols() != n)
    throw std::invalid_argument("ObservationSet: noise_cov must be n x n");
}

ObservationSet ObservationSet::noiseless(Eigen::MatrixX2d locations,
                                         Eigen::VectorXd values) {
  ObservationSet obs;
  const auto n = values.size();
  obs.locations = std::move(locations);
  obs.values = std::move(values);
  obs.noise_cov = Eigen::MatrixXd::Zero(n, n);
  obs.validate();
  return obs;
}

ObservationSet ObservationSet::empty() {
  ObservationSet obs;
  obs.locations.resize(0, 2);
  obs.values.resize(0);
  obs.noise_cov.resize(0, 0);
  return obs;
}

void GaussianFieldModel::validate() const {
  const auto n = mean.size();
  if (grid.num_cells() != n || cov.rows() != n || cov.cols() != n)
    throw std::invalid_argument("GaussianFieldModel: inconsistent sizes");
}

GaussianFieldModel make_prior_model(const Grid& grid, const KernelSpec& kernel) {
  GaussianFieldModel m;
  m.grid = grid;
  m.mean = Eigen::VectorXd::Zero(grid.num_cells());
  m.cov = covariance_matrix(kernel, grid.centers, grid.centers);
  return m;
}

std::vector<int> observation_cells(const Grid& grid, const ObservationSet& obs) {
  std::vector<int> cells(obs.size());
  for (int i = 0; i < obs.size(); ++i)
    cells[i] = nearest_cell(grid, obs.locations.row(i).transpose());
  return cells;
}

namespace {

std::string duplicate_cell_report(const std::vector<int>& cells) {
  std::set<int> seen, dups;
  for (int c : cells) {
    if (!seen.insert(c).second) dups.insert(c);
  }
  if (dups.empty()) return "";
  std::ostringstream os;
  os << "; duplicate observation cells:";
  for (int c : dups) os << ' ' << c;
  return os.str();
}

// Factorization of the observation covariance with jitter escalation.  The
// solve is validated against its own residual so that near-singular systems
// get more jitter instead of silently returning garbage.
struct ObsSolver {
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  double jitter = 0.0;

  ObsSolver(const Eigen::MatrixXd& c_s, const std::vector<int>& cells) {
    const int n = static_cast<int>(c_s.rows());
    const double scale = std::max(c_s.diagonal().maxCoeff(), 1e-300);
    double jit = 0.0;
    for (int attempt = 0; attempt < 7; ++attempt) {
      Eigen::MatrixXd work = c_s;
      work.diagonal().array() += jit;
      ldlt.compute(work);
      if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) {
        // Probe solve accuracy with one right-hand side.
        Eigen::VectorXd probe = Eigen::VectorXd::Ones(n);
        Eigen::VectorXd sol = ldlt.solve(probe);
        const double rel = (work * sol - probe).norm() / probe.norm();
        if (rel < 1e-8) {
          jitter = jit;
          return;
        }
      }
      jit = (jit == 0.0) ? 1e-12 * scale : jit * 100.0;
    }
    throw std::runtime_error("condition: observation covariance singular after jitter" +
                             duplicate_cell_report(cells));
  }
};

}  // namespace

GaussianFieldModel condition(const GaussianFieldModel& model, const ObservationSet& obs) {
  model.validate();
  obs.validate();
  if (obs.size() == 0) return model;

  const std::vector<int> cells = observation_cells(model.grid, obs);
  const int n = obs.size();
  const int N = model.grid.num_cells();

  // Noiseless duplicates make C_s structurally singular; report them rather
  // than letting jitter blur contradictory data.
  if (obs.noise_cov.diagonal().isZero()) {
    const std::string dups = duplicate_cell_report(cells);
    if (!dups.empty())
      throw std::runtime_error("condition: repeated noiseless observation cells" + dups);
  }

  Eigen::MatrixXd c_s(n, n);        // C(X,X) + Sigma
  Eigen::MatrixXd cross(N, n);      // C(x, X)
  Eigen::VectorXd prior_at_obs(n);  // mean(X)
  for (int a = 0; a < n; ++a) {
    prior_at_obs[a] = model.mean[cells[a]];
    cross.col(a) = model.cov.col(cells[a]);
    for (int b = 0; b < n; ++b) c_s(a, b) = model.cov(cells[a], cells[b]);
  }
  c_s += obs.noise_cov;
  c_s = 0.5 * (c_s + c_s.transpose()).eval();

  ObsSolver solver(c_s, cells);
  const Eigen::VectorXd alpha = solver.ldlt.solve(obs.values - prior_at_obs);
  const Eigen::MatrixXd gain = solver.ldlt.solve(cross.transpose());  // n x N

  GaussianFieldModel out;
  out.grid = model.grid;
  out.mean = model.mean + cross * alpha;
  out.cov = model.cov - cross * gain;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

double log_marginal_likelihood(const KernelSpec& spec, const ObservationSet& obs,
                               Eigen::Vector2d* grad_log_params) {
  spec.validate();
  obs.validate();
  const int n = obs.size();
  if (n == 0) throw std::invalid_argument("log_marginal_likelihood: no observations");

  const double nugget = 1e-8 * spec.sigma * spec.sigma;
  Eigen::MatrixXd kmat = covariance_matrix(spec, obs.locations, obs.locations);
  Eigen::MatrixXd c_s = kmat + obs.noise_cov;
  c_s.diagonal().array() += nugget;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(c_s);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
    return -std::numeric_limits<double>::infinity();

  const Eigen::VectorXd alpha = ldlt.solve(obs.values);
  const double logdet = ldlt.vectorD().array().log().sum();
  const double lml = -0.5 * obs.values.dot(alpha) - 0.5 * logdet -
                     0.5 * n * std::log(2.0 * std::numbers::pi);

  if (grad_log_params) {
    // dL/dtheta = 0.5 tr((alpha alpha^T - C^-1) dC/dtheta)
    const Eigen::MatrixXd cinv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd outer = alpha * alpha.transpose();

    // d c_s / d log(sigma) = 2 (K + nugget I); Sigma is fixed.
    Eigen::MatrixXd dsig = 2.0 * kmat;
    dsig.diagonal().array() += 2.0 * nugget;
    // d c_s / d log(length) = length * dK/dlength
    Eigen::MatrixXd dlen(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double r = (obs.locations.row(i) - obs.locations.row(j)).norm();
        dlen(i, j) = spec.length * kernel_eval_dlength(spec, r);
      }
    (*grad_log_params)[0] = 0.5 * ((outer - cinv).array() * dsig.array()).sum();
    (*grad_log_params)[1] = 0.5 * ((outer - cinv).array() * dlen.array()).sum();
  }
  return lml;
}

KernelSpec fit_hyperparameters(KernelFamily family, const ObservationSet& obs,
                               const FitOptions& opts) {
  obs.validate();
  if (obs.size() < 3)
    throw std::invalid_argument("fit_hyperparameters: need at least 3 observations");

  optim::LbfgsOptions lopts;
  lopts.max_iters = 200;
  lopts.grad_tol = 1e-7;
  lopts.lower = Eigen::Vector2d(std::log(opts.sigma_lo), std::log(opts.length_lo));
  lopts.upper = Eigen::Vector2d(std::log(opts.sigma_hi), std::log(opts.length_hi));

  const auto negative_lml = [&](const Eigen::VectorXd& logp, Eigen::VectorXd& grad) {
    KernelSpec trial{family, std::exp(logp[0]), std::exp(logp[1])};
    Eigen::Vector2d g;
    const double lml = log_marginal_likelihood(trial, obs, &g);
    if (!std::isfinite(lml)) {
      grad = Eigen::VectorXd::Zero(2);
      return 1e30;  // reject; line search backs off
    }
    grad = -g;
    return -lml;
  };

  rng::Stream starts(opts.seed, 0);
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  double best_grad_norm = std::numeric_limits<double>::infinity();
  bool any_converged = false;

  for (int s = 0; s < opts.multistarts; ++s) {
    Eigen::VectorXd x0(2);
    // log-uniform over the box; first start at the box center
    for (int d = 0; d < 2; ++d) {
      const double t = (s == 0) ? 0.5 : starts.next_double();
      x0[d] = lopts.lower[d] + t * (lopts.upper[d] - lopts.lower[d]);
    }
    optim::LbfgsResult r;
    try {
      r = optim::minimize_lbfgs(negative_lml, x0, lopts);
    } catch (const std::runtime_error&) {
      continue;
    }
    any_converged = any_converged || r.converged || r.message == "step tolerance reached" ||
                    r.message == "line search failed";  // stalled at a bound still counts
    if (r.fx < best_obj) {
      best_obj = r.fx;
      best_x = r.x;
      best_grad_norm = r.grad_norm;
    }
  }

  if (!best_x.size() || best_obj >= 1e30) {
    std::ostringstream os;
    os << "fit_hyperparameters: no start converged (best objective " << best_obj
       << ", gradient norm " << best_grad_norm << ")";
    throw std::runtime_error(os.str());
  }
  (void)any_converged;
  return KernelSpec{family, std::exp(best_x[0]), std::exp(best_x[1])};
}

}  // namespace pickle
