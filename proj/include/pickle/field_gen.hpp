#ifndef PICKLE_FIELD_GEN_HPP
#define PICKLE_FIELD_GEN_HPP

#include <cstdint>

#include "pickle/gpr.hpp"
#include "pickle/grid.hpp"
#include "pickle/kernels.hpp"

namespace pickle {

/// One exact zero-mean draw from the kernel's covariance on cell centers,
/// via dense Cholesky with jitter escalation.  Deterministic in seed.
Eigen::VectorXd generate_reference(const KernelSpec& kernel, const Grid& grid,
                                   std::uint64_t seed);

/// `count` noiseless observations at distinct cell centers drawn uniformly
/// without replacement.  Deterministic in seed.
ObservationSet sample_observations(const Eigen::VectorXd& field, const Grid& grid,
                                   int count, std::uint64_t seed);

/// || reference - estimate ||_p / || reference ||_p for p in {1, 2}.
double relative_lp_error(const Eigen::VectorXd& reference, const Eigen::VectorXd& estimate,
                         int p);

}  // namespace pickle

#endif
