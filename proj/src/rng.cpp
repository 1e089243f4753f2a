#include "pickle/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pickle::rng {

namespace {

// splitmix64: full-period 64-bit mixer, used both to blend (seed, stream)
// and as the generator itself.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Stream::Stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = stream ^ 0xd1b54a32d192ed03ULL;
  std::uint64_t b = splitmix64(s);
  state_ = a ^ (b + 0x9e3779b97f4a7c15ULL);
}

std::uint64_t Stream::next_u64() { return splitmix64(state_); }

double Stream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Stream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double Stream::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  double u1;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

Eigen::VectorXd standard_normals(std::uint64_t seed, std::uint64_t stream, int n) {
  Stream s(seed, stream);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = s.next_normal();
  return out;
}

std::vector<int> sample_without_replacement(std::uint64_t seed, std::uint64_t stream,
                                            int n, int k) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
  Stream s(seed, stream);
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  // partial Fisher-Yates
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(s.next_below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = seed ^ (a * 0x9e3779b97f4a7c15ULL);
  std::uint64_t first = splitmix64(s);
  s = first ^ (b + 0xd1b54a32d192ed03ULL);
  return splitmix64(s);
}

}  // namespace pickle::rng
