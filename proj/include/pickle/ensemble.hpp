#ifndef PICKLE_ENSEMBLE_HPP
#define PICKLE_ENSEMBLE_HPP

#include <cstdint>
#include <functional>

#include "pickle/fv.hpp"
#include "pickle/gpr.hpp"
#include "pickle/kle.hpp"

namespace pickle {

struct EnsembleConfig {
  int n_ens = 5000;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Optional map applied to each sampled field before the forward solve
/// (identity when absent); used for latent-field parameterizations.
using FieldTransform = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Monte Carlo estimate of the unconditional mean and covariance of u:
/// samples coefficient vectors N(0, I), evaluates the y expansion (and
/// `transform`, if any), solves the PDE per realization, and reduces with
/// the unbiased 1/(n_ens - 1) covariance normalization.  Realization i
/// derives from (seed, i) alone, so the result is independent of `workers`.
GaussianFieldModel build_u_model(const Ckle& y_ckle, const ResidualOperator& op,
                                 const EnsembleConfig& cfg,
                                 const FieldTransform& transform = nullptr);

/// Conditions the ensemble model on u observations and truncates to n_eta
/// terms.  Throws if the conditional covariance is numerically zero
/// (ensemble too small relative to the observations).
Ckle build_u_ckle(const GaussianFieldModel& u_model, const ObservationSet& u_obs,
                  int n_eta);

}  // namespace pickle

#endif
