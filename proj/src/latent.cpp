#include "pickle/latent.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace pickle {

void BinaryFieldSpec::validate() const {
  if (!(y1 > y2)) throw std::invalid_argument("BinaryFieldSpec: requires y1 > y2");
  if (!(epsilon > 0.0)) throw std::invalid_argument("BinaryFieldSpec: epsilon must be positive");
}

double expit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

Eigen::VectorXd latent_to_y(const BinaryFieldSpec& spec, const Eigen::VectorXd& f) {
  spec.validate();
  if (!f.allFinite()) throw std::invalid_argument("latent_to_y: non-finite latent field");
  Eigen::VectorXd y(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i)
    y[i] = (spec.y1 - spec.y2) * expit(f[i] / spec.epsilon) + spec.y2;
  return y;
}

Eigen::VectorXd latent_to_y_derivative(const BinaryFieldSpec& spec, const Eigen::VectorXd& f) {
  spec.validate();
  Eigen::VectorXd d(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double p = expit(f[i] / spec.epsilon);
    d[i] = (spec.y1 - spec.y2) * p * (1.0 - p) / spec.epsilon;
  }
  return d;
}

Eigen::VectorXd labels_from_observations(const ObservationSet& y_obs,
                                         const BinaryFieldSpec& spec, double tol) {
  spec.validate();
  Eigen::VectorXd labels(y_obs.size());
  for (int i = 0; i < y_obs.size(); ++i) {
    const double v = y_obs.values[i];
    if (std::abs(v - spec.y1) <= tol)
      labels[i] = 1.0;
    else if (std::abs(v - spec.y2) <= tol)
      labels[i] = 0.0;
    else
      throw std::invalid_argument("labels_from_observations: value " + std::to_string(v) +
                                  " is not within tolerance of either facies");
  }
  return labels;
}

GaussianFieldModel classify_latent(const ObservationSet& y_obs, const BinaryFieldSpec& spec,
                                   const KernelSpec& kernel, const Grid& grid) {
  y_obs.validate();
  kernel.validate();
  if (y_obs.size() == 0) throw std::invalid_argument("classify_latent: no observations");
  const Eigen::VectorXd b = labels_from_observations(y_obs, spec);

  const int n = y_obs.size();
  Eigen::MatrixXd kmat = covariance_matrix(kernel, y_obs.locations, y_obs.locations);
  kmat.diagonal().array() += 1e-10 * kernel.sigma * kernel.sigma;

  // Newton iterations for the mode of  log p(b|f) - 1/2 f^T K^-1 f
  // with the standard stabilized update through B = I + W^1/2 K W^1/2.
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd pi(n), w_sqrt(n), grad_lik(n);
  Eigen::LLT<Eigen::MatrixXd> chol_b;
  bool converged = false;
  for (int iter = 0; iter < 100; ++iter) {
    for (int i = 0; i < n; ++i) {
      pi[i] = expit(f[i]);
      grad_lik[i] = b[i] - pi[i];
      w_sqrt[i] = std::sqrt(std::max(pi[i] * (1.0 - pi[i]), 1e-12));
    }
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Identity(n, n);
    bmat += w_sqrt.asDiagonal() * kmat * w_sqrt.asDiagonal();
    chol_b.compute(bmat);
    if (chol_b.info() != Eigen::Success)
      throw std::runtime_error("classify_latent: Newton system factorization failed");

    const Eigen::VectorXd rhs = w_sqrt.array().square().matrix().asDiagonal() * f + grad_lik;
    const Eigen::VectorXd a =
        rhs - w_sqrt.asDiagonal() *
                  chol_b.solve(w_sqrt.asDiagonal() * (kmat * rhs));
    const Eigen::VectorXd f_new = kmat * a;
    const double dx = (f_new - f).lpNorm<Eigen::Infinity>();
    f = f_new;
    if (dx < 1e-10 * (1.0 + f.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
  }
  if (!converged) throw std::runtime_error("classify_latent: Newton did not converge");

  // Refresh curvature quantities at the mode.
  for (int i = 0; i < n; ++i) {
    pi[i] = expit(f[i]);
    grad_lik[i] = b[i] - pi[i];
    w_sqrt[i] = std::sqrt(std::max(pi[i] * (1.0 - pi[i]), 1e-12));
  }
  Eigen::MatrixXd bmat = Eigen::MatrixXd::Identity(n, n);
  bmat += w_sqrt.asDiagonal() * kmat * w_sqrt.asDiagonal();
  chol_b.compute(bmat);

  // Predictive latent mean and covariance on the grid:
  //   mu(x)    = C(x, X) (b - pi)
  //   cov(x,x')= C(x,x') - C(x, X) W^1/2 B^-1 W^1/2 C(X, x')
  const Eigen::MatrixXd cross = covariance_matrix(kernel, grid.centers, y_obs.locations);
  const Eigen::MatrixXd v =
      chol_b.matrixL().solve(w_sqrt.asDiagonal() * cross.transpose());  // n x N

  GaussianFieldModel model;
  model.grid = grid;
  model.mean = cross * grad_lik;
  model.cov = covariance_matrix(kernel, grid.centers, grid.centers) - v.transpose() * v;
  model.cov = 0.5 * (model.cov + model.cov.transpose()).eval();
  return model;
}

InversionResult invert_binary(const GaussianFieldModel& latent_model,
                              const BinaryFieldSpec& spec, const ObservationSet& u_obs,
                              const ResidualOperator& op, const InversionConfig& cfg,
                              const EnsembleConfig& ens_cfg) {
  spec.validate();
  cfg.validate();

  TruncationRule rule;
  rule.max_terms = cfg.n_xi;
  const Ckle f_ckle = decompose(latent_model, rule);

  const FieldTransform to_y = [&spec](const Eigen::VectorXd& f) {
    return latent_to_y(spec, f);
  };
  const GaussianFieldModel u_model = build_u_model(f_ckle, op, ens_cfg, to_y);
  const Ckle u_ckle = build_u_ckle(u_model, u_obs, cfg.n_eta);

  FieldParameterization y_param;
  y_param.dim = f_ckle.num_terms();
  y_param.value = [&f_ckle, &spec](const Eigen::VectorXd& xi) {
    return latent_to_y(spec, evaluate(f_ckle, xi));
  };
  y_param.jacobian = [&f_ckle, &spec](const Eigen::VectorXd& xi) {
    const Eigen::VectorXd f = evaluate(f_ckle, xi);
    return Eigen::MatrixXd(latent_to_y_derivative(spec, f).asDiagonal() * f_ckle.modes);
  };
  return invert_parameterized(y_param, u_ckle, op, cfg);
}

}  // namespace pickle
