#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pickle/kernels.hpp"
#include "pickle/rng.hpp"

using namespace pickle;

TEST_SUITE_BEGIN("kernels");

namespace {
const KernelFamily kFamilies[] = {KernelFamily::Gaussian, KernelFamily::Matern52,
                                  KernelFamily::Matern32, KernelFamily::Exponential};
}

TEST_CASE("variance at zero lag is exactly sigma^2") {
  for (auto fam : kFamilies) {
    const KernelSpec spec{fam, 1.7, 0.2};
    CHECK(kernel_eval(spec, 0.0) == 1.7 * 1.7);
  }
}

TEST_CASE("decay to zero at large lag") {
  for (auto fam : kFamilies) {
    const KernelSpec spec{fam, 1.0, 0.2};
    CHECK(kernel_eval(spec, 10.0) < 1e-12);
  }
}

TEST_CASE("matern52 closed form at r = length") {
  const KernelSpec spec{KernelFamily::Matern52, 1.0, 0.2};
  const double expected = (1.0 + std::sqrt(5.0) + 5.0 / 3.0) * std::exp(-std::sqrt(5.0));
  CHECK(kernel_eval(spec, 0.2) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("negative distance rejected") {
  const KernelSpec spec{KernelFamily::Gaussian, 1.0, 0.2};
  CHECK_THROWS_AS(kernel_eval(spec, -1e-9), std::invalid_argument);
}

TEST_CASE("covariance matrix matches scalar double loop") {
  Eigen::MatrixX2d pts(3, 2);
  pts << 0.1, 0.2, 0.7, 0.4, 0.3, 0.9;
  const KernelSpec spec{KernelFamily::Matern32, 1.3, 0.35};
  const Eigen::MatrixXd cov = covariance_matrix(spec, pts, pts);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double r = (pts.row(i) - pts.row(j)).norm();
      CHECK(cov(i, j) == doctest::Approx(kernel_eval(spec, r)).epsilon(1e-15));
    }
}

TEST_CASE("single point and coincident lists") {
  Eigen::MatrixX2d one(1, 2);
  one << 0.5, 0.5;
  const KernelSpec spec{KernelFamily::Exponential, 2.0, 0.1};
  const Eigen::MatrixXd c1 = covariance_matrix(spec, one, one);
  REQUIRE(c1.rows() == 1);
  CHECK(c1(0, 0) == 4.0);

  Eigen::MatrixX2d pts(4, 2);
  pts << 0.1, 0.1, 0.9, 0.2, 0.4, 0.8, 0.6, 0.6;
  const Eigen::MatrixXd c = covariance_matrix(spec, pts, pts);
  CHECK((c - c.transpose()).norm() == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(c(i, i) == 4.0);
}

TEST_CASE("positive semidefiniteness on random point sets") {
  rng::Stream stream(42, 0);
  for (auto fam : kFamilies) {
    const KernelSpec spec{fam, 1.0, 0.15};
    Eigen::MatrixX2d pts(200, 2);
    for (int i = 0; i < 200; ++i) {
      pts(i, 0) = stream.next_double();
      pts(i, 1) = stream.next_double();
    }
    const Eigen::MatrixXd cov = covariance_matrix(spec, pts, pts);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-8 * spec.sigma * spec.sigma);
  }
}

TEST_CASE("monotone decay in distance") {
  for (auto fam : kFamilies) {
    const KernelSpec spec{fam, 1.0, 0.25};
    double prev = kernel_eval(spec, 0.0);
    for (double r = 0.01; r < 3.0; r += 0.01) {
      const double v = kernel_eval(spec, r);
      CHECK(v <= prev + 1e-15);
      prev = v;
    }
  }
}

TEST_CASE("length derivative matches finite differences") {
  for (auto fam : kFamilies) {
    for (double r : {0.05, 0.2, 0.8}) {
      const double l = 0.3, h = 1e-6;
      const KernelSpec hi{fam, 1.2, l + h}, lo{fam, 1.2, l - h};
      const double fd = (kernel_eval(hi, r) - kernel_eval(lo, r)) / (2 * h);
      const KernelSpec spec{fam, 1.2, l};
      CHECK(kernel_eval_dlength(spec, r) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("invalid hyperparameters rejected") {
  const KernelSpec zero_sigma{KernelFamily::Gaussian, 0.0, 0.2};
  const KernelSpec negative_length{KernelFamily::Gaussian, 1.0, -0.2};
  CHECK_THROWS_AS(zero_sigma.validate(), std::invalid_argument);
  CHECK_THROWS_AS(negative_length.validate(), std::invalid_argument);
}

TEST_SUITE_END();
