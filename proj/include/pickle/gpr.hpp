#ifndef PICKLE_GPR_HPP
#define PICKLE_GPR_HPP

#include <Eigen/Core>
#include <vector>

#include "pickle/grid.hpp"
#include "pickle/kernels.hpp"

namespace pickle {

/// Point observations of a scalar field: locations, values, and the
/// observation-error covariance (zero matrix = noiseless data).
struct ObservationSet {
  Eigen::MatrixX2d locations;  // n x 2
  Eigen::VectorXd values;      // n
  Eigen::MatrixXd noise_cov;   // n x n, symmetric PSD

  int size() const { return static_cast<int>(values.size()); }
  void validate() const;

  static ObservationSet noiseless(Eigen::MatrixX2d locations, Eigen::VectorXd values);
  static ObservationSet empty();
};

/// Discrete Gaussian field on grid cell centers: mean vector plus dense
/// covariance matrix.  All GP machinery in the library works on this
/// representation; covariance kernels only appear when the matrix is built.
struct GaussianFieldModel {
  Grid grid;
  Eigen::VectorXd mean;  // N
  Eigen::MatrixXd cov;   // N x N symmetric

  void validate() const;
};

/// Zero-mean prior with covariance from a stationary kernel.
GaussianFieldModel make_prior_model(const Grid& grid, const KernelSpec& kernel);

/// Cell indices of the observation locations (snapped via nearest_cell).
std::vector<int> observation_cells(const Grid& grid, const ObservationSet& obs);

/// Gaussian conditioning of `model` on `obs`.  Observation locations snap to
/// cell centers; the conditioned mean interpolates noiseless data and the
/// conditioned covariance loses rank at the observation cells.  Throws if
/// the observation covariance stays numerically singular after jitter
/// escalation (duplicate observation cells are reported).
GaussianFieldModel condition(const GaussianFieldModel& model, const ObservationSet& obs);

/// Gaussian log marginal likelihood of `obs` under a zero-mean GP with the
/// given kernel, plus its gradient with respect to (log sigma, log length).
/// A relative nugget of 1e-8*sigma^2 is always included for stability and is
/// differentiated consistently.
double log_marginal_likelihood(const KernelSpec& spec, const ObservationSet& obs,
                               Eigen::Vector2d* grad_log_params = nullptr);

struct FitOptions {
  int multistarts = 8;
  std::uint64_t seed = 0x9D1CE5;
  double sigma_lo = 1e-3, sigma_hi = 1e3;
  double length_lo = 1e-3, length_hi = 10.0;
};

/// Maximum marginal likelihood estimate of (sigma, length) for a fixed
/// family, via multi-start projected L-BFGS in log-parameter space.
KernelSpec fit_hyperparameters(KernelFamily family, const ObservationSet& obs,
                               const FitOptions& opts = {});

}  // namespace pickle

#endif
