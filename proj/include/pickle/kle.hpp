#ifndef PICKLE_KLE_HPP
#define PICKLE_KLE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "pickle/gpr.hpp"
#include "pickle/grid.hpp"

namespace pickle {

/// Truncated (conditional) Karhunen-Loeve expansion of a discrete Gaussian
/// field: field(coeffs) = mean + modes * coeffs, where column i of `modes`
/// is sqrt(lambda_i) * phi_i at cell centers and the phi_i are orthonormal
/// under the cell-area-weighted inner product.
struct Ckle {
  Grid grid;
  Eigen::VectorXd mean;         // N
  Eigen::MatrixXd modes;        // N x M
  Eigen::VectorXd eigenvalues;  // M, nonincreasing, positive
  double total_spectrum = 0.0;  // sum of all positive eigenvalues

  int num_terms() const { return static_cast<int>(eigenvalues.size()); }
};

struct TruncationRule {
  /// Keep the smallest M with retained eigenvalue mass >= capture * total.
  std::optional<double> capture;
  /// Additionally require discarded tail <= atol.
  std::optional<double> atol;
  /// Hard cap on the number of terms.
  std::optional<int> max_terms;
};

/// Eigendecomposition of the model covariance scaled by the cell area
/// (midpoint quadrature of the continuous eigenproblem).  Negative
/// eigenvalues are clamped to zero and excluded.  Throws if no positive
/// eigenvalues remain or the rule is empty.
Ckle decompose(const GaussianFieldModel& model, const TruncationRule& rule);

/// mean + modes * coeffs; coeffs must have length M.
Eigen::VectorXd evaluate(const Ckle& ckle, const Eigen::VectorXd& coeffs);

/// `count` realizations with i.i.d. standard normal coefficients.  The i-th
/// realization depends only on (seed, i), so identical seeds reproduce
/// identical fields regardless of the caller's threading.
std::vector<Eigen::VectorXd> sample(const Ckle& ckle, std::uint64_t seed, int count);

/// Coefficient vector of the i-th realization for the given seed.
Eigen::VectorXd sample_coefficients(const Ckle& ckle, std::uint64_t seed, int index);

}  // namespace pickle

#endif
