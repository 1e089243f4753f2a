#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "pickle/fv.hpp"
#include "pickle/rng.hpp"

using namespace pickle;

TEST_SUITE_BEGIN("fv");

namespace {

Eigen::VectorXd random_field(const Grid& grid, std::uint64_t seed, double scale = 1.0) {
  return scale * rng::standard_normals(seed, 0, grid.num_cells());
}

// Independent dense assembly of the same discretization, written from the
// flux balance directly (no triplet machinery shared with the library).
void dense_oracle(const Grid& g, const Eigen::VectorXd& y, Eigen::MatrixXd& amat,
                  Eigen::VectorXd& rhs) {
  const int n = g.num_cells();
  amat = Eigen::MatrixXd::Zero(n, n);
  rhs = Eigen::VectorXd::Zero(n);
  const auto kk = [&](int i, int j) { return std::exp(y[j * g.nx + i]); };
  const auto idx = [&](int i, int j) { return j * g.nx + i; };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const int c = idx(i, j);
      if (i > 0) {
        const double t = (g.hy / g.hx) * 2.0 * kk(i, j) * kk(i - 1, j) /
                         (kk(i, j) + kk(i - 1, j));
        amat(c, c) += t;
        amat(c, idx(i - 1, j)) -= t;
      }
      if (i + 1 < g.nx) {
        const double t = (g.hy / g.hx) * 2.0 * kk(i, j) * kk(i + 1, j) /
                         (kk(i, j) + kk(i + 1, j));
        amat(c, c) += t;
        amat(c, idx(i + 1, j)) -= t;
      }
      if (j > 0) {
        const double t = (g.hx / g.hy) * 2.0 * kk(i, j) * kk(i, j - 1) /
                         (kk(i, j) + kk(i, j - 1));
        amat(c, c) += t;
        amat(c, idx(i, j - 1)) -= t;
      }
      if (j + 1 < g.ny) {
        const double t = (g.hx / g.hy) * 2.0 * kk(i, j) * kk(i, j + 1) /
                         (kk(i, j) + kk(i, j + 1));
        amat(c, c) += t;
        amat(c, idx(i, j + 1)) -= t;
      }
      if (i == 0) {
        const double t = 2.0 * (g.hy / g.hx) * kk(i, j);
        amat(c, c) += t;
        rhs[c] += t;
      }
      if (i == g.nx - 1) {
        const double t = 2.0 * (g.hy / g.hx) * kk(i, j);
        amat(c, c) += t;
      }
    }
}

}  // namespace

TEST_CASE("row sums reflect the Dirichlet coupling only") {
  const Grid grid = build_grid(6, 5);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(grid.num_cells());
  const FvSystem sys = assemble(op, y);
  const Eigen::MatrixXd a = Eigen::MatrixXd(sys.matrix);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const int c = grid.linear_index(i, j);
      double expected = 0.0;
      if (i == 0 || i == grid.nx - 1) expected = 2.0 * grid.hy / grid.hx;
      if (i == 0 && i == grid.nx - 1) expected *= 2;
      CHECK(a.row(c).sum() == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("constant shift scales the system by exp(c)") {
  const Grid grid = build_grid(4, 4);
  const ResidualOperator op(grid);
  const double c = 0.7;
  const FvSystem base = assemble(op, Eigen::VectorXd::Zero(16));
  const FvSystem scaled = assemble(op, Eigen::VectorXd::Constant(16, c));
  const Eigen::MatrixXd a0 = Eigen::MatrixXd(base.matrix);
  const Eigen::MatrixXd a1 = Eigen::MatrixXd(scaled.matrix);
  CHECK((a1 - std::exp(c) * a0).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((scaled.rhs - std::exp(c) * base.rhs).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("2x2 system matches the hand-assembled stencil") {
  const Grid grid = build_grid(2, 2);
  const ResidualOperator op(grid);
  const FvSystem sys = assemble(op, Eigen::VectorXd::Zero(4));
  // hx = hy = 1/2: interior T = 1, Dirichlet T = 2
  Eigen::MatrixXd expected(4, 4);
  expected << 4, -1, -1, 0,
      -1, 4, 0, -1,
      -1, 0, 4, -1,
      0, -1, -1, 4;
  Eigen::VectorXd expected_rhs(4);
  expected_rhs << 2, 0, 2, 0;
  CHECK((Eigen::MatrixXd(sys.matrix) - expected).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK((sys.rhs - expected_rhs).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("uniform medium reproduces the linear profile exactly") {
  for (auto [nx, ny] : {std::pair{32, 32}, std::pair{8, 4}}) {
    const Grid grid = build_grid(nx, ny);
    const ResidualOperator op(grid);
    const Eigen::VectorXd u = solve(op, Eigen::VectorXd::Zero(grid.num_cells()));
    for (int k = 0; k < grid.num_cells(); ++k)
      CHECK(u[k] == doctest::Approx(1.0 - grid.centers(k, 0)).epsilon(1e-10));
  }
}

TEST_CASE("layered y keeps the solution independent of x2") {
  const Grid grid = build_grid(16, 16);
  const ResidualOperator op(grid);
  Eigen::VectorXd y(grid.num_cells());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      y[grid.linear_index(i, j)] = std::sin(3.0 * grid.centers(grid.linear_index(i, 0), 0));
  const Eigen::VectorXd u = solve(op, y);
  for (int j = 1; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i)
      CHECK(std::abs(u[grid.linear_index(i, j)] - u[grid.linear_index(i, 0)]) < 1e-10);
}

TEST_CASE("two-block medium matches the series-conductance solution") {
  const Grid grid = build_grid(32, 32);
  const ResidualOperator op(grid);
  const double k1 = 1.0, k2 = 10.0;
  Eigen::VectorXd y(grid.num_cells());
  for (int k = 0; k < grid.num_cells(); ++k)
    y[k] = grid.centers(k, 0) < 0.5 ? std::log(k1) : std::log(k2);
  const Eigen::VectorXd u = solve(op, y);

  // continuous solution: piecewise linear with flux q = 1 / (1/(2 k1) + 1/(2 k2))
  const double q = 1.0 / (0.5 / k1 + 0.5 / k2);
  const double u_interface = 1.0 - q * 0.5 / k1;
  CHECK(u_interface == doctest::Approx(k1 / (k1 + k2)).epsilon(1e-12));
  for (int k = 0; k < grid.num_cells(); ++k) {
    const double x = grid.centers(k, 0);
    const double exact = x < 0.5 ? 1.0 - q * x / k1 : q * (1.0 - x) / k2;
    CHECK(std::abs(u[k] - exact) < 1e-8);
  }
}

TEST_CASE("residual of a solve is numerically zero") {
  const Grid grid = build_grid(8, 8);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = random_field(grid, 3);
  const Eigen::VectorXd u = solve(op, y);
  const FvSystem sys = assemble(op, y);
  const Eigen::VectorXd r = residual(op, u, y);
  CHECK(r.lpNorm<Eigen::Infinity>() <= 1e-9 * sys.rhs.lpNorm<Eigen::Infinity>());
}

TEST_CASE("residual at u = 0 equals minus the right-hand side") {
  const Grid grid = build_grid(4, 4);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(16);
  const Eigen::VectorXd r = residual(op, Eigen::VectorXd::Zero(16), y);
  const FvSystem sys = assemble(op, y);
  CHECK((r + sys.rhs).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("random instance matches the dense oracle") {
  const Grid grid = build_grid(4, 4);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = random_field(grid, 10);
  const Eigen::VectorXd u = random_field(grid, 11);

  Eigen::MatrixXd amat;
  Eigen::VectorXd rhs;
  dense_oracle(grid, y, amat, rhs);
  const Eigen::VectorXd r_oracle = amat * u - rhs;
  const Eigen::VectorXd r = residual(op, u, y);
  CHECK((r - r_oracle).lpNorm<Eigen::Infinity>() < 1e-11);
}

TEST_CASE("residual jacobians match central finite differences") {
  rng::Stream seeds(77, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int nx = (trial % 2 == 0) ? 4 : 8;
    const Grid grid = build_grid(nx, nx);
    const ResidualOperator op(grid);
    const Eigen::VectorXd y = random_field(grid, seeds.next_u64());
    const Eigen::VectorXd u = random_field(grid, seeds.next_u64());
    const ResidualJacobians jac = residual_jacobians(op, u, y);

    const double h = 1e-6;
    const int n = grid.num_cells();
    Eigen::MatrixXd fd_u(n, n), fd_y(n, n);
    for (int m = 0; m < n; ++m) {
      Eigen::VectorXd up = u, um = u;
      up[m] += h;
      um[m] -= h;
      fd_u.col(m) = (residual(op, up, y) - residual(op, um, y)) / (2 * h);
      Eigen::VectorXd yp = y, ym = y;
      yp[m] += h;
      ym[m] -= h;
      fd_y.col(m) = (residual(op, u, yp) - residual(op, u, ym)) / (2 * h);
    }
    const double scale_u = fd_u.norm(), scale_y = fd_y.norm();
    CHECK((Eigen::MatrixXd(jac.wrt_u) - fd_u).norm() < 1e-5 * scale_u);
    CHECK((Eigen::MatrixXd(jac.wrt_y) - fd_y).norm() < 1e-5 * scale_y);
  }
}

TEST_CASE("residual is linear in u") {
  const Grid grid = build_grid(4, 4);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = random_field(grid, 5);
  const ResidualJacobians j1 = residual_jacobians(op, random_field(grid, 6), y);
  const ResidualJacobians j2 = residual_jacobians(op, random_field(grid, 7), y);
  CHECK((Eigen::MatrixXd(j1.wrt_u) - Eigen::MatrixXd(j2.wrt_u)).norm() == 0.0);
}

TEST_CASE("summed y-sensitivities reproduce the residual (homogeneity)") {
  // r(u, y + c) = e^c r(u, y), so (dr/dy) * ones = r
  const Grid grid = build_grid(4, 4);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(16, 0.4);
  const Eigen::VectorXd u = random_field(grid, 13);
  const Eigen::VectorXd r = residual(op, u, y);
  const ResidualJacobians jac = residual_jacobians(op, u, y);
  const Eigen::VectorXd dr = jac.wrt_y * Eigen::VectorXd::Ones(16);
  CHECK((dr - r).lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + r.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("system matrix is symmetric positive definite") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Grid grid = build_grid(8, 8);
    const ResidualOperator op(grid);
    const Eigen::VectorXd y = random_field(grid, seed, 1.5);
    const Eigen::MatrixXd a = Eigen::MatrixXd(assemble(op, y).matrix);
    CHECK((a - a.transpose()).lpNorm<Eigen::Infinity>() < 1e-12 * a.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("discrete maximum principle: solution stays in [0, 1]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Grid grid = build_grid(16, 16);
    const ResidualOperator op(grid);
    const Eigen::VectorXd u = solve(op, random_field(grid, seed));
    CHECK(u.minCoeff() >= -1e-12);
    CHECK(u.maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("inflow equals outflow") {
  const Grid grid = build_grid(16, 16);
  const ResidualOperator op(grid);
  const Eigen::VectorXd y = random_field(grid, 17);
  const Eigen::VectorXd u = solve(op, y);
  const Eigen::VectorXd k = y.array().exp();
  double inflow = 0.0, outflow = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    const int left = grid.linear_index(0, j);
    const int right = grid.linear_index(grid.nx - 1, j);
    inflow += 2.0 * (grid.hy / grid.hx) * k[left] * (1.0 - u[left]);
    outflow += 2.0 * (grid.hy / grid.hx) * k[right] * (u[right] - 0.0);
  }
  CHECK(inflow == doctest::Approx(outflow).epsilon(1e-8));
}

TEST_CASE("subsampling keeps the structured residual subset") {
  const Grid grid = build_grid(32, 32);
  const ResidualOperator op(grid);
  CHECK(subsample_residuals(op, 1).num_residuals() == 1024);
  const ResidualOperator s2 = subsample_residuals(op, 2);
  CHECK(s2.num_residuals() == 256);
  const ResidualOperator s4 = subsample_residuals(op, 4);
  CHECK(s4.num_residuals() == 64);
  for (int idx : s4.residual_cells) {
    const int i = idx % 32, j = idx / 32;
    CHECK(i % 4 == 0);
    CHECK(j % 4 == 0);
  }
  // strictly increasing
  for (std::size_t i = 1; i < s2.residual_cells.size(); ++i)
    CHECK(s2.residual_cells[i] > s2.residual_cells[i - 1]);
  CHECK_THROWS_AS(subsample_residuals(op, 3), std::invalid_argument);
}

TEST_CASE("restricted residual rows agree with full rows") {
  const Grid grid = build_grid(8, 8);
  const ResidualOperator full(grid);
  const ResidualOperator sub = subsample_residuals(full, 2);
  const Eigen::VectorXd y = random_field(grid, 23);
  const Eigen::VectorXd u = random_field(grid, 24);
  const Eigen::VectorXd r_full = residual(full, u, y);
  const Eigen::VectorXd r_sub = residual(sub, u, y);
  for (int i = 0; i < sub.num_residuals(); ++i)
    CHECK(r_sub[i] == r_full[sub.residual_cells[i]]);
}

TEST_CASE("non-finite fields rejected") {
  const Grid grid = build_grid(4, 4);
  const ResidualOperator op(grid);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(16);
  y[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(assemble(op, y), std::invalid_argument);
}

TEST_SUITE_END();
