#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "pickle/field_gen.hpp"
#include "pickle/gpr.hpp"
#include "pickle/rng.hpp"

using namespace pickle;

TEST_SUITE_BEGIN("gpr");

namespace {

ObservationSet obs_at_cells(const Grid& grid, const std::vector<int>& cells,
                            const std::vector<double>& values) {
  Eigen::MatrixX2d locs(cells.size(), 2);
  Eigen::VectorXd vals(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    locs.row(i) = grid.centers.row(cells[i]);
    vals[i] = values[i];
  }
  return ObservationSet::noiseless(std::move(locs), std::move(vals));
}

}  // namespace

TEST_CASE("conditioning on zero observations returns the model unchanged") {
  const Grid grid = build_grid(4, 4);
  const GaussianFieldModel model =
      make_prior_model(grid, KernelSpec{KernelFamily::Matern32, 1.0, 0.3});
  const GaussianFieldModel out = condition(model, ObservationSet::empty());
  CHECK((out.mean - model.mean).norm() == 0.0);
  CHECK((out.cov - model.cov).norm() == 0.0);
}

TEST_CASE("one noiseless observation is interpolated with zero variance") {
  const Grid grid = build_grid(8, 8);
  const GaussianFieldModel model =
      make_prior_model(grid, KernelSpec{KernelFamily::Matern52, 1.0, 0.3});
  const int cell = 27;
  const double z = 0.83;
  const GaussianFieldModel out = condition(model, obs_at_cells(grid, {cell}, {z}));
  CHECK(out.mean[cell] == doctest::Approx(z).epsilon(1e-8));
  CHECK(out.cov(cell, cell) <= 1e-8);
}

TEST_CASE("three observations match the dense oracle") {
  const Grid grid = build_grid(8, 8);
  const KernelSpec kernel{KernelFamily::Matern52, 1.2, 0.25};
  const GaussianFieldModel model = make_prior_model(grid, kernel);
  const std::vector<int> cells = {5, 30, 51};
  const std::vector<double> values = {0.4, -1.1, 0.7};
  const GaussianFieldModel out = condition(model, obs_at_cells(grid, cells, values));

  // independent dense evaluation with an explicit inverse
  const int n = 3, N = grid.num_cells();
  Eigen::MatrixXd c_ss(n, n);
  Eigen::MatrixXd c_xs(N, n);
  Eigen::VectorXd z(n);
  for (int a = 0; a < n; ++a) {
    z[a] = values[a];
    for (int b = 0; b < n; ++b) c_ss(a, b) = model.cov(cells[a], cells[b]);
    c_xs.col(a) = model.cov.col(cells[a]);
  }
  const Eigen::MatrixXd inv = c_ss.inverse();
  const Eigen::VectorXd mean_oracle = model.mean + c_xs * inv * z;
  const Eigen::MatrixXd cov_oracle = model.cov - c_xs * inv * c_xs.transpose();

  CHECK((out.mean - mean_oracle).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK((out.cov - cov_oracle).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("variance never increases under conditioning") {
  const Grid grid = build_grid(8, 8);
  const GaussianFieldModel model =
      make_prior_model(grid, KernelSpec{KernelFamily::Exponential, 1.5, 0.2});
  const GaussianFieldModel out =
      condition(model, obs_at_cells(grid, {3, 17, 44, 60}, {1.0, -0.5, 0.2, 2.0}));
  for (int k = 0; k < grid.num_cells(); ++k)
    CHECK(out.cov(k, k) <= model.cov(k, k) + 1e-10);
}

TEST_CASE("conditioning sequentially equals conditioning jointly") {
  const Grid grid = build_grid(8, 8);
  const GaussianFieldModel model =
      make_prior_model(grid, KernelSpec{KernelFamily::Matern32, 1.0, 0.35});
  const std::vector<int> first = {2, 21, 40}, second = {11, 50, 62};
  const std::vector<double> v1 = {0.3, -0.8, 1.2}, v2 = {0.1, 0.9, -0.4};

  GaussianFieldModel seq = condition(condition(model, obs_at_cells(grid, first, v1)),
                                     obs_at_cells(grid, second, v2));
  std::vector<int> all_cells = first;
  all_cells.insert(all_cells.end(), second.begin(), second.end());
  std::vector<double> all_values = v1;
  all_values.insert(all_values.end(), v2.begin(), v2.end());
  GaussianFieldModel joint = condition(model, obs_at_cells(grid, all_cells, all_values));

  const double mean_scale = std::max(1.0, joint.mean.lpNorm<Eigen::Infinity>());
  const double cov_scale = std::max(1.0, joint.cov.lpNorm<Eigen::Infinity>());
  CHECK((seq.mean - joint.mean).lpNorm<Eigen::Infinity>() < 1e-6 * mean_scale);
  CHECK((seq.cov - joint.cov).lpNorm<Eigen::Infinity>() < 1e-6 * cov_scale);
}

TEST_CASE("duplicate noiseless observation cells are reported") {
  const Grid grid = build_grid(4, 4);
  const GaussianFieldModel model =
      make_prior_model(grid, KernelSpec{KernelFamily::Gaussian, 1.0, 0.3});
  // same cell twice with contradictory noiseless values cannot be conditioned
  bool threw = false;
  try {
    condition(model, obs_at_cells(grid, {5, 5}, {1.0, -1.0}));
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("duplicate") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("log marginal likelihood gradient matches finite differences") {
  const Grid grid = build_grid(8, 8);
  const KernelSpec truth{KernelFamily::Matern52, 1.0, 0.3};
  const Eigen::VectorXd field = generate_reference(truth, grid, 11);
  const ObservationSet obs = sample_observations(field, grid, 20, 3);

  for (const KernelSpec spec : {KernelSpec{KernelFamily::Matern52, 0.8, 0.2},
                                KernelSpec{KernelFamily::Gaussian, 1.4, 0.5},
                                KernelSpec{KernelFamily::Exponential, 0.6, 0.1}}) {
    Eigen::Vector2d grad;
    log_marginal_likelihood(spec, obs, &grad);

    const double h = 1e-5;
    for (int d = 0; d < 2; ++d) {
      auto perturbed = [&](double delta) {
        KernelSpec s = spec;
        if (d == 0)
          s.sigma = std::exp(std::log(spec.sigma) + delta);
        else
          s.length = std::exp(std::log(spec.length) + delta);
        return log_marginal_likelihood(s, obs);
      };
      const double fd = (perturbed(h) - perturbed(-h)) / (2 * h);
      CHECK(grad[d] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("hyperparameter fit recovers the generating length scale") {
  const Grid grid = build_grid(32, 32);
  const KernelSpec truth{KernelFamily::Gaussian, 1.0, 0.5};
  std::vector<double> lengths;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Eigen::VectorXd field = generate_reference(truth, grid, seed);
    const ObservationSet obs = sample_observations(field, grid, 50, seed + 100);
    const KernelSpec fit = fit_hyperparameters(KernelFamily::Gaussian, obs);
    lengths.push_back(fit.length);
  }
  std::sort(lengths.begin(), lengths.end());
  const double median = 0.5 * (lengths[4] + lengths[5]);
  CHECK(median > 0.25);
  CHECK(median < 0.75);
}

TEST_CASE("fitted sigma scales with the data scale") {
  const Grid grid = build_grid(32, 32);
  std::vector<double> ratios;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const KernelSpec k1{KernelFamily::Matern52, 1.0, 0.3};
    const Eigen::VectorXd field = generate_reference(k1, grid, seed);
    const ObservationSet obs1 = sample_observations(field, grid, 50, seed + 200);
    ObservationSet obs2 = obs1;
    obs2.values *= 2.0;  // same field with doubled amplitude
    const double s1 = fit_hyperparameters(KernelFamily::Matern52, obs1).sigma;
    const double s2 = fit_hyperparameters(KernelFamily::Matern52, obs2).sigma;
    ratios.push_back(s2 / s1);
  }
  std::sort(ratios.begin(), ratios.end());
  const double median = 0.5 * (ratios[4] + ratios[5]);
  CHECK(median > 1.3);
  CHECK(median < 3.0);
}

TEST_CASE("all-zero data drives sigma to the lower bound") {
  const Grid grid = build_grid(8, 8);
  ObservationSet obs =
      obs_at_cells(grid, {1, 9, 22, 35, 48, 60}, {0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  const KernelSpec fit = fit_hyperparameters(KernelFamily::Matern32, obs);
  CHECK(fit.sigma <= 1.5e-3);
}

TEST_CASE("fit requires at least three observations") {
  const Grid grid = build_grid(4, 4);
  const ObservationSet obs = obs_at_cells(grid, {0, 5}, {1.0, 2.0});
  CHECK_THROWS_AS(fit_hyperparameters(KernelFamily::Gaussian, obs), std::invalid_argument);
}

TEST_SUITE_END();
