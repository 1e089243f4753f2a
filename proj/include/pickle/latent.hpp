#ifndef PICKLE_LATENT_HPP
#define PICKLE_LATENT_HPP

#include <Eigen/Core>

#include "pickle/ensemble.hpp"
#include "pickle/gpr.hpp"
#include "pickle/inversion.hpp"

namespace pickle {

/// Two-facies log-diffusion field driven by a smooth latent field f:
///   y = (y1 - y2) expit(f / epsilon) + y2,   y1 > y2, epsilon > 0.
/// Small epsilon sharpens the facies boundary.
struct BinaryFieldSpec {
  double y1 = 0.0;
  double y2 = -2.302585092994046;  // -ln 10: facies contrast of 10
  double epsilon = 1.0 / 30.0;

  void validate() const;
};

/// Overflow-safe logistic function.
double expit(double t);

/// Entrywise facies map applied to a latent field.
Eigen::VectorXd latent_to_y(const BinaryFieldSpec& spec, const Eigen::VectorXd& f);

/// Entrywise derivative dy/df at f.
Eigen::VectorXd latent_to_y_derivative(const BinaryFieldSpec& spec, const Eigen::VectorXd& f);

/// Binary labels from facies-valued observations; each value must be within
/// `tol` of spec.y1 (label 1) or spec.y2 (label 0).
Eigen::VectorXd labels_from_observations(const ObservationSet& y_obs,
                                         const BinaryFieldSpec& spec, double tol = 1e-6);

/// Approximate conditional latent model from binary observations: Laplace
/// approximation of the logistic GP classifier (Newton iterations for the
/// posterior mode, Gaussian curvature for the covariance), evaluated at grid
/// cell centers.
GaussianFieldModel classify_latent(const ObservationSet& y_obs, const BinaryFieldSpec& spec,
                                   const KernelSpec& kernel, const Grid& grid);

/// Facies inversion: builds the latent cKLE (cfg.n_xi terms), runs the
/// sampling-based covariance model for u with realizations mapped through
/// latent_to_y, conditions on u observations (cfg.n_eta terms), and
/// minimizes the penalized residual over (xi, eta) with the logistic chain
/// rule.  The returned y_est is latent_to_y(spec, f_est).
InversionResult invert_binary(const GaussianFieldModel& latent_model,
                              const BinaryFieldSpec& spec, const ObservationSet& u_obs,
                              const ResidualOperator& op, const InversionConfig& cfg,
                              const EnsembleConfig& ens_cfg);

}  // namespace pickle

#endif
