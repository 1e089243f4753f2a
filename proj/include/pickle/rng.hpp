#ifndef PICKLE_RNG_HPP
#define PICKLE_RNG_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace pickle::rng {

/// Counter-based pseudo-random stream.  Every consumer of randomness in the
/// library derives its draws from a (seed, stream) pair, so results never
/// depend on thread scheduling or call order.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double next_double();
  /// Uniform integer in [0, n), rejection-sampled so the distribution is
  /// exact and the byte stream is stable across platforms.
  std::uint64_t next_below(std::uint64_t n);
  /// Standard normal via Box-Muller (deterministic, no library state).
  double next_normal();

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// n i.i.d. standard normal draws from the (seed, stream) pair.
Eigen::VectorXd standard_normals(std::uint64_t seed, std::uint64_t stream, int n);

/// k distinct integers drawn uniformly from {0, ..., n-1}, ascending order
/// not guaranteed; deterministic in (seed, stream).
std::vector<int> sample_without_replacement(std::uint64_t seed, std::uint64_t stream,
                                            int n, int k);

/// Stable sub-seed for a named purpose (replica index, pipeline stage, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace pickle::rng

#endif
