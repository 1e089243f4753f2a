#include "pickle/field_gen.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "pickle/rng.hpp"

namespace pickle {

Eigen::VectorXd generate_reference(const KernelSpec& kernel, const Grid& grid,
                                   std::uint64_t seed) {
  kernel.validate();
  const int n = grid.num_cells();
  const Eigen::MatrixXd cov = covariance_matrix(kernel, grid.centers, grid.centers);

  const double s2 = kernel.sigma * kernel.sigma;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 1e-8 * s2;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::MatrixXd work = cov;
    work.diagonal().array() += jitter;
    llt.compute(work);
    if (llt.info() == Eigen::Success) {
      const Eigen::VectorXd normals = rng::standard_normals(seed, 0xf1e1dULL, n);
      return llt.matrixL() * normals;
    }
    jitter *= 100.0;
  }
  throw std::runtime_error("generate_reference: Cholesky failed after jitter escalation");
}

ObservationSet sample_observations(const Eigen::VectorXd& field, const Grid& grid,
                                   int count, std::uint64_t seed) {
  const int n = grid.num_cells();
  if (field.size() != n) throw std::invalid_argument("sample_observations: field size mismatch");
  if (count < 1 || count > n)
    throw std::invalid_argument("sample_observations: count must be in [1, N]");

  const std::vector<int> cells = rng::sample_without_replacement(seed, 0x0b5ULL, n, count);
  Eigen::MatrixX2d locations(count, 2);
  Eigen::VectorXd values(count);
  for (int i = 0; i < count; ++i) {
    locations.row(i) = grid.centers.row(cells[i]);
    values[i] = field[cells[i]];
  }
  return ObservationSet::noiseless(std::move(locations), std::move(values));
}

double relative_lp_error(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate,
                         int p) {
  if (reference.size() != estimate.size())
    throw std::invalid_argument("relative_lp_error: length mismatch");
  if (p != 1 && p != 2) throw std::invalid_argument("relative_lp_error: p must be 1 or 2");
  const double ref_norm =
      (p == 1) ? reference.lpNorm<1>() : reference.lpNorm<2>();
  if (!(ref_norm > 0.0)) throw std::invalid_argument("relative_lp_error: zero reference norm");
  const Eigen::VectorXd diff = reference - estimate;
  return ((p == 1) ? diff.lpNorm<1>() : diff.lpNorm<2>()) / ref_norm;
}

}  // namespace pickle
