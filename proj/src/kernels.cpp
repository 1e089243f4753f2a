#include "pickle/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace pickle {

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "exponential") return KernelFamily::Exponential;
  throw std::invalid_argument("unknown kernel family: " + name);
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Exponential: return "exponential";
  }
  return "unknown";
}

void KernelSpec::validate() const {
  if (!(sigma > 0.0) || !(length > 0.0))
    throw std::invalid_argument("KernelSpec: sigma and length must be positive");
}

double kernel_eval(const KernelSpec& spec, double r) {
  if (r < 0.0) throw std::invalid_argument("kernel_eval: negative distance");
  const double s2 = spec.sigma * spec.sigma;
  if (r == 0.0) return s2;
  const double q = r / spec.length;
  switch (spec.family) {
    case KernelFamily::Gaussian:
      return s2 * std::exp(-0.5 * q * q);
    case KernelFamily::Matern52: {
      const double a = std::sqrt(5.0) * q;
      return s2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
    case KernelFamily::Matern32: {
      const double a = std::sqrt(3.0) * q;
      return s2 * (1.0 + a) * std::exp(-a);
    }
    case KernelFamily::Exponential:
      return s2 * std::exp(-q);
  }
  return 0.0;
}

double kernel_eval_dlength(const KernelSpec& spec, double r) {
  if (r < 0.0) throw std::invalid_argument("kernel_eval_dlength: negative distance");
  const double s2 = spec.sigma * spec.sigma;
  if (r == 0.0) return 0.0;
  const double l = spec.length;
  const double q = r / l;
  switch (spec.family) {
    case KernelFamily::Gaussian:
      return s2 * std::exp(-0.5 * q * q) * q * q / l;
    case KernelFamily::Matern52: {
      const double a = std::sqrt(5.0) * q;
      return s2 * (a * a / 3.0) * (1.0 + a) * std::exp(-a) / l;
    }
    case KernelFamily::Matern32: {
      const double a = std::sqrt(3.0) * q;
      return s2 * a * a * std::exp(-a) / l;
    }
    case KernelFamily::Exponential:
      return s2 * std::exp(-q) * q / l;
  }
  return 0.0;
}

Eigen::MatrixXd covariance_matrix(const KernelSpec& spec,
                                  const Eigen::MatrixX2d& points_a,
                                  const Eigen::MatrixX2d& points_b) {
  spec.validate();
  const auto na = points_a.rows();
  const auto nb = points_b.rows();
  Eigen::MatrixXd cov(na, nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double r = (points_a.row(i) - points_b.row(j)).norm();
      cov(i, j) = kernel_eval(spec, r);
    }
  return cov;
}

}  // namespace pickle
