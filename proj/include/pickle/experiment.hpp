#ifndef PICKLE_EXPERIMENT_HPP
#define PICKLE_EXPERIMENT_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pickle/inversion.hpp"
#include "pickle/kernels.hpp"
#include "pickle/latent.hpp"

namespace pickle {

inline constexpr const char* kVersion = "0.1.0";

/// Declarative experiment description, read from a JSON config file.
struct ExperimentConfig {
  int nx = 32, ny = 32;
  KernelSpec kernel;                 // reference/true kernel (latent kernel for "binary")
  KernelFamily assumed_family = KernelFamily::Gaussian;  // family fitted by ckli-theta
  int n_obs_y = 50, n_obs_u = 50;
  int n_xi = 100, n_eta = 100;
  int n_ens = 5000;
  double gamma = 1e-6;
  int subsample_factor = 1;          // 1 = full residual vector
  std::vector<std::string> methods;  // subset of {ckli, ckli-theta, map, binary}
  int replicas = 10;
  std::uint64_t seed = 0;

  // facies experiment parameters
  double binary_y1 = 0.0;
  double binary_y2 = -2.302585092994046;
  double binary_epsilon_ref = 0.01;       // reference sharpness (near-step interface)
  double binary_epsilon_inv = 1.0 / 30.0; // inversion sharpness (finite gradients)

  // solver controls
  int inv_max_iters = 200;
  double inv_grad_tol = 1e-8;
  Optimizer optimizer = Optimizer::GaussNewton;
  int map_max_iters = 1000;
  double map_grad_tol = 1e-8;

  void validate() const;
  /// Canonical key=value dump used for hashing; field order is fixed.
  std::string canonical_string() const;
  std::string hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::string& origin);

/// Per-method metrics of one replica.
struct MethodOutcome {
  double rel_l2 = 0.0;
  double rel_l1 = 0.0;
  bool converged = false;
  double final_grad_norm = 0.0;
  int iterations = 0;
  double fitted_sigma = 0.0;   // ckli-theta only
  double fitted_length = 0.0;  // ckli-theta only
};

struct ReplicaResult {
  int replica = 0;
  std::uint64_t replica_seed = 0;
  // keyed "method/variant", e.g. "ckli/full", "ckli/subsampled", "map"
  std::map<std::string, MethodOutcome> outcomes;
  // estimated and reference fields for artifact emission, keyed by name
  std::map<std::string, Eigen::VectorXd> fields;
};

struct RunOptions {
  std::filesystem::path output_dir = "results";
  std::optional<std::filesystem::path> cache_dir;
  int threads = 1;
  bool write_artifacts = true;
};

/// One replica of the configured pipeline (no file output).  Exposed so the
/// acceptance suite and unit tests can drive the pipeline in-process.
ReplicaResult run_replica(const ExperimentConfig& cfg, int replica,
                          const std::optional<std::filesystem::path>& cache_dir = {});

struct AggregateRow {
  std::string key;     // method/variant
  std::string metric;  // rel_l2 | rel_l1
  double median = 0.0, q25 = 0.0, q75 = 0.0;
  int count = 0;
};

struct ExperimentReport {
  std::string run_id;
  std::vector<ReplicaResult> replicas;
  std::vector<AggregateRow> aggregate;
};

/// Runs all replicas (concurrently up to opts.threads), writes per-replica
/// JSON, field CSV grids, and the aggregate report.csv under
/// output_dir/<run-id>/, and returns the in-memory report.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

struct SweepRow {
  int n_xi = 0;
  std::string key;
  double median = 0.0, q25 = 0.0, q75 = 0.0;
};

/// Error-versus-N_xi study: reruns the experiment for each requested number
/// of y-expansion terms (values above the available spectrum are capped with
/// a warning) and emits plot-ready rows; MAP supplies the flat reference
/// line.  Written to output_dir/<run-id>/sweep.csv when opts.write_artifacts.
std::vector<SweepRow> sweep_nxi(const ExperimentConfig& cfg, const std::vector<int>& nxi_values,
                                const RunOptions& opts);

double median_of(std::vector<double> values);

}  // namespace pickle

#endif
