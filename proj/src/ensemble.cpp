#include "pickle/ensemble.hpp"

#include <atomic>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pickle {

GaussianFieldModel build_u_model(const Ckle& y_ckle, const ResidualOperator& op,
                                 const EnsembleConfig& cfg, const FieldTransform& transform) {
  if (cfg.n_ens < 2) throw std::invalid_argument("build_u_model: n_ens must be >= 2");
  const int n = op.grid.num_cells();
  if (y_ckle.grid.num_cells() != n)
    throw std::invalid_argument("build_u_model: grid mismatch");

  Eigen::MatrixXd realizations(n, cfg.n_ens);
  std::atomic<int> failed_index{-1};

  const int workers = std::max(1, cfg.workers);
  auto lane = [&](int lane_id) {
    ForwardSolver solver(op);
    for (int i = lane_id; i < cfg.n_ens; i += workers) {
      if (failed_index.load(std::memory_order_relaxed) >= 0) return;
      try {
        Eigen::VectorXd y = evaluate(y_ckle, sample_coefficients(y_ckle, cfg.seed, i));
        if (transform) y = transform(y);
        realizations.col(i) = solver.solve(y);
      } catch (const std::exception&) {
        int expected = -1;
        failed_index.compare_exchange_strong(expected, i);
        return;
      }
    }
  };

  if (workers == 1) {
    lane(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(lane, w);
    for (auto& t : pool) t.join();
  }
  if (failed_index.load() >= 0)
    throw std::runtime_error("build_u_model: forward solve failed at realization " +
                             std::to_string(failed_index.load()));

  GaussianFieldModel model;
  model.grid = op.grid;
  model.mean = realizations.rowwise().mean();
  Eigen::MatrixXd deviations = realizations.colwise() - model.mean;
  model.cov.resize(n, n);
  model.cov.setZero();
  model.cov.selfadjointView<Eigen::Lower>().rankUpdate(deviations,
                                                       1.0 / (cfg.n_ens - 1));
  model.cov.triangularView<Eigen::StrictlyUpper>() =
      model.cov.transpose().triangularView<Eigen::StrictlyUpper>();
  return model;
}

Ckle build_u_ckle(const GaussianFieldModel& u_model, const ObservationSet& u_obs,
                  int n_eta) {
  if (n_eta < 1) throw std::invalid_argument("build_u_ckle: n_eta must be positive");
  const GaussianFieldModel conditioned = condition(u_model, u_obs);
  const double trace = conditioned.cov.trace();
  if (!(trace > 1e-14 * std::max(1.0, u_model.cov.trace())))
    throw std::runtime_error(
        "build_u_ckle: conditional covariance is numerically zero; "
        "increase n_ens relative to the number of u observations");
  TruncationRule rule;
  rule.max_terms = n_eta;
  return decompose(conditioned, rule);
}

}  // namespace pickle
