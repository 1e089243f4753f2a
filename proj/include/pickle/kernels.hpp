#ifndef PICKLE_KERNELS_HPP
#define PICKLE_KERNELS_HPP

#include <Eigen/Core>
#include <string>

namespace pickle {

enum class KernelFamily { Gaussian, Matern52, Matern32, Exponential };

KernelFamily kernel_family_from_string(const std::string& name);
std::string to_string(KernelFamily family);

/// Stationary isotropic covariance kernel: family plus (sigma, length).
struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double sigma = 1.0;   // standard deviation, > 0
  double length = 1.0;  // correlation length, > 0

  void validate() const;
};

/// Covariance at lag r >= 0.  Exactly sigma^2 at r = 0.
double kernel_eval(const KernelSpec& spec, double r);

/// d k / d length at lag r, used by marginal-likelihood gradients.
double kernel_eval_dlength(const KernelSpec& spec, double r);

/// Cross-covariance matrix with entry (i,j) = k(||a_i - b_j||).
Eigen::MatrixXd covariance_matrix(const KernelSpec& spec,
                                  const Eigen::MatrixX2d& points_a,
                                  const Eigen::MatrixX2d& points_b);

}  // namespace pickle

#endif
