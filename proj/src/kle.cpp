#include "pickle/kle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "pickle/rng.hpp"

namespace pickle {

Ckle decompose(const GaussianFieldModel& model, const TruncationRule& rule) {
  model.validate();
  if (!rule.capture && !rule.atol && !rule.max_terms)
    throw std::invalid_argument("decompose: truncation rule is empty");
  if (rule.capture && !(*rule.capture > 0.0 && *rule.capture <= 1.0))
    throw std::invalid_argument("decompose: capture fraction must be in (0,1]");

  const int N = model.grid.num_cells();
  const double area = model.grid.cell_area();

  Eigen::MatrixXd scaled = 0.5 * area * (model.cov + model.cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("decompose: eigendecomposition failed");

  // Ascending from Eigen; flip to nonincreasing and clamp numerical noise.
  Eigen::VectorXd vals = eig.eigenvalues().reverse();
  const double floor = 1e-14 * std::max(vals[0], 0.0);
  int positive = 0;
  double total = 0.0;
  for (int i = 0; i < N; ++i) {
    if (vals[i] > floor) {
      ++positive;
      total += vals[i];
    } else {
      vals[i] = 0.0;
    }
  }
  if (positive == 0) throw std::runtime_error("decompose: degenerate field, no positive eigenvalues");

  int m = positive;
  if (rule.capture || rule.atol) {
    double retained = 0.0;
    for (m = 0; m < positive; ++m) {
      retained += vals[m];
      const bool capture_ok = !rule.capture || retained >= *rule.capture * total;
      const bool atol_ok = !rule.atol || (total - retained) <= *rule.atol;
      if (capture_ok && atol_ok) {
        ++m;
        break;
      }
    }
  }
  if (rule.max_terms) m = std::min(m, *rule.max_terms);
  m = std::min(m, positive);

  Ckle ckle;
  ckle.grid = model.grid;
  ckle.mean = model.mean;
  ckle.eigenvalues = vals.head(m);
  ckle.total_spectrum = total;
  // Euclidean-orthonormal eigenvectors v; phi = v / sqrt(area) has unit
  // cell-area-weighted norm, and column i of modes is sqrt(lambda_i) phi_i.
  ckle.modes.resize(N, m);
  const double inv_sqrt_area = 1.0 / std::sqrt(area);
  for (int i = 0; i < m; ++i)
    ckle.modes.col(i) =
        eig.eigenvectors().col(N - 1 - i) * (std::sqrt(vals[i]) * inv_sqrt_area);
  return ckle;
}

Eigen::VectorXd evaluate(const Ckle& ckle, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != ckle.num_terms())
    throw std::invalid_argument("evaluate: coefficient count mismatch");
  return ckle.mean + ckle.modes * coeffs;
}

Eigen::VectorXd sample_coefficients(const Ckle& ckle, std::uint64_t seed, int index) {
  return rng::standard_normals(seed, static_cast<std::uint64_t>(index), ckle.num_terms());
}

std::vector<Eigen::VectorXd> sample(const Ckle& ckle, std::uint64_t seed, int count) {
  if (count < 1) throw std::invalid_argument("sample: count must be positive");
  std::vector<Eigen::VectorXd> fields;
  fields.reserve(count);
  for (int i = 0; i < count; ++i)
    fields.push_back(evaluate(ckle, sample_coefficients(ckle, seed, i)));
  return fields;
}

}  // namespace pickle
