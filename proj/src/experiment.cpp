#include "pickle/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "pickle/ensemble.hpp"
#include "pickle/field_gen.hpp"
#include "pickle/io.hpp"
#include "pickle/map_estimate.hpp"
#include "pickle/rng.hpp"

namespace pickle {

using nlohmann::json;

namespace {

// rng purpose tags, one per pipeline stage
enum Purpose : std::uint64_t {
  kReference = 1,
  kYObs = 2,
  kUObs = 3,
  kEnsembleCkli = 4,
  kEnsembleTheta = 5,
  kEnsembleBinary = 6,
};

const std::vector<std::string> kKnownMethods = {"ckli", "ckli-theta", "map", "binary"};

}  // namespace

void ExperimentConfig::validate() const {
  std::ostringstream err;
  if (nx < 2 || ny < 2) err << "grid.nx and grid.ny must be >= 2; ";
  try {
    kernel.validate();
  } catch (const std::exception& e) {
    err << e.what() << "; ";
  }
  const int n_cells = nx * ny;
  if (n_obs_y < 1 || n_obs_y > n_cells) err << "n_obs_y out of [1, N]; ";
  if (n_obs_u < 1 || n_obs_u > n_cells) err << "n_obs_u out of [1, N]; ";
  if (n_xi < 1 || n_eta < 1) err << "n_xi and n_eta must be positive; ";
  if (n_ens < 2) err << "n_ens must be >= 2; ";
  if (n_ens <= n_obs_u) err << "n_ens must exceed n_obs_u (ensemble rank condition); ";
  if (!(gamma > 0.0)) err << "gamma must be positive; ";
  if (subsample_factor < 1 || nx % subsample_factor != 0 || ny % subsample_factor != 0)
    err << "subsample_factor must divide nx and ny; ";
  if (replicas < 1) err << "replicas must be positive; ";
  if (methods.empty()) err << "methods list is empty; ";
  for (const auto& m : methods)
    if (std::find(kKnownMethods.begin(), kKnownMethods.end(), m) == kKnownMethods.end())
      err << "unknown method '" << m << "'; ";
  if (!(binary_y1 > binary_y2)) err << "binary.y1 must exceed binary.y2; ";
  if (!(binary_epsilon_ref > 0.0) || !(binary_epsilon_inv > 0.0))
    err << "binary epsilons must be positive; ";
  const std::string text = err.str();
  if (!text.empty()) throw std::invalid_argument("config invalid: " + text);
}

std::string ExperimentConfig::canonical_string() const {
  std::ostringstream os;
  os << "nx=" << nx << ";ny=" << ny << ";kernel=" << to_string(kernel.family) << ','
     << io::format_double(kernel.sigma) << ',' << io::format_double(kernel.length)
     << ";assumed=" << to_string(assumed_family) << ";n_obs_y=" << n_obs_y
     << ";n_obs_u=" << n_obs_u << ";n_xi=" << n_xi << ";n_eta=" << n_eta
     << ";n_ens=" << n_ens << ";gamma=" << io::format_double(gamma)
     << ";subsample=" << subsample_factor << ";methods=";
  for (const auto& m : methods) os << m << ',';
  os << ";replicas=" << replicas << ";seed=" << seed << ";binary="
     << io::format_double(binary_y1) << ',' << io::format_double(binary_y2) << ','
     << io::format_double(binary_epsilon_ref) << ',' << io::format_double(binary_epsilon_inv)
     << ";inv=" << inv_max_iters << ',' << io::format_double(inv_grad_tol) << ','
     << (optimizer == Optimizer::GaussNewton ? "gn" : "lbfgs") << ";map=" << map_max_iters
     << ',' << io::format_double(map_grad_tol);
  return os.str();
}

std::string ExperimentConfig::hash() const { return io::fnv1a_hex(canonical_string()); }

ExperimentConfig parse_config(const std::string& json_text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }

  ExperimentConfig cfg;
  try {
    if (doc.contains("grid")) {
      cfg.nx = doc["grid"].value("nx", cfg.nx);
      cfg.ny = doc["grid"].value("ny", cfg.ny);
    }
    if (doc.contains("kernel")) {
      const auto& k = doc["kernel"];
      cfg.kernel.family = kernel_family_from_string(k.value("family", "gaussian"));
      cfg.kernel.sigma = k.value("sigma", 1.0);
      cfg.kernel.length = k.value("length", 0.2);
    }
    cfg.assumed_family =
        doc.contains("assumed_family")
            ? kernel_family_from_string(doc["assumed_family"].get<std::string>())
            : cfg.kernel.family;
    cfg.n_obs_y = doc.value("n_obs_y", cfg.n_obs_y);
    cfg.n_obs_u = doc.value("n_obs_u", cfg.n_obs_u);
    cfg.n_xi = doc.value("n_xi", cfg.n_xi);
    cfg.n_eta = doc.value("n_eta", cfg.n_eta);
    cfg.n_ens = doc.value("n_ens", cfg.n_ens);
    cfg.gamma = doc.value("gamma", cfg.gamma);
    cfg.subsample_factor = doc.value("subsample_factor", cfg.subsample_factor);
    cfg.methods = doc.value("methods", std::vector<std::string>{"ckli", "map"});
    cfg.replicas = doc.value("replicas", cfg.replicas);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("binary")) {
      const auto& b = doc["binary"];
      cfg.binary_y1 = b.value("y1", cfg.binary_y1);
      cfg.binary_y2 = b.value("y2", cfg.binary_y2);
      cfg.binary_epsilon_ref = b.value("epsilon_ref", cfg.binary_epsilon_ref);
      cfg.binary_epsilon_inv = b.value("epsilon_inv", cfg.binary_epsilon_inv);
    }
    if (doc.contains("inversion")) {
      const auto& i = doc["inversion"];
      cfg.inv_max_iters = i.value("max_iters", cfg.inv_max_iters);
      cfg.inv_grad_tol = i.value("grad_tol", cfg.inv_grad_tol);
      const std::string opt = i.value("optimizer", "gauss-newton");
      if (opt == "gauss-newton")
        cfg.optimizer = Optimizer::GaussNewton;
      else if (opt == "lbfgs")
        cfg.optimizer = Optimizer::Lbfgs;
      else
        throw std::invalid_argument("inversion.optimizer must be gauss-newton or lbfgs");
    }
    if (doc.contains("map")) {
      const auto& m = doc["map"];
      cfg.map_max_iters = m.value("max_iters", cfg.map_max_iters);
      cfg.map_grad_tol = m.value("grad_tol", cfg.map_grad_tol);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_config(buffer.str(), path.string());
}

namespace {

double quantile(std::vector<double> sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

struct EnsembleCache {
  std::optional<std::filesystem::path> dir;

  std::string key_for(const Ckle& y_ckle, int n_ens, std::uint64_t seed,
                      const std::string& transform_tag) const {
    std::string blob;
    blob.reserve(64 + 8 * (y_ckle.mean.size() + y_ckle.modes.size()));
    auto append = [&blob](const double* p, std::size_t n) {
      blob.append(reinterpret_cast<const char*>(p), 8 * n);
    };
    blob += std::to_string(y_ckle.grid.nx) + "x" + std::to_string(y_ckle.grid.ny) + "/" +
            std::to_string(n_ens) + "/" + std::to_string(seed) + "/" + transform_tag + "/";
    append(y_ckle.mean.data(), y_ckle.mean.size());
    append(y_ckle.eigenvalues.data(), y_ckle.eigenvalues.size());
    append(y_ckle.modes.data(), static_cast<std::size_t>(y_ckle.modes.size()));
    return io::fnv1a_hex(blob);
  }

  GaussianFieldModel get_or_build(const Ckle& y_ckle, const ResidualOperator& op,
                                  const EnsembleConfig& cfg, const FieldTransform& transform,
                                  const std::string& transform_tag) const {
    if (!dir) return build_u_model(y_ckle, op, cfg, transform);
    const auto file = *dir / ("umodel_" + key_for(y_ckle, cfg.n_ens, cfg.seed, transform_tag) +
                              ".bin");
    if (std::filesystem::exists(file)) return io::load_field_model(file);
    GaussianFieldModel model = build_u_model(y_ckle, op, cfg, transform);
    std::filesystem::create_directories(*dir);
    io::save_field_model(file, model);
    return model;
  }
};

MethodOutcome outcome_from(const InversionResult& res, const Eigen::VectorXd& y_ref) {
  MethodOutcome out;
  out.rel_l2 = relative_lp_error(y_ref, res.y_est, 2);
  out.rel_l1 = relative_lp_error(y_ref, res.y_est, 1);
  out.converged = res.converged;
  out.final_grad_norm = res.final_grad_norm;
  out.iterations = static_cast<int>(res.objective_history.size());
  return out;
}

}  // namespace

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty");
  std::sort(values.begin(), values.end());
  return quantile(std::move(values), 0.5);
}

ReplicaResult run_replica(const ExperimentConfig& cfg, int replica,
                          const std::optional<std::filesystem::path>& cache_dir) {
  cfg.validate();
  const Grid grid = build_grid(cfg.nx, cfg.ny);
  const ResidualOperator op_full(grid);
  const bool subsampled = cfg.subsample_factor > 1;
  const ResidualOperator op_sub =
      subsampled ? subsample_residuals(op_full, cfg.subsample_factor) : op_full;

  ReplicaResult result;
  result.replica = replica;
  result.replica_seed = rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(replica), 0);

  const auto stage_seed = [&](Purpose p) {
    return rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(replica), p);
  };
  const auto wants = [&](const char* m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  const bool binary_mode = wants("binary");
  const BinaryFieldSpec ref_spec{cfg.binary_y1, cfg.binary_y2, cfg.binary_epsilon_ref};
  const BinaryFieldSpec inv_spec{cfg.binary_y1, cfg.binary_y2, cfg.binary_epsilon_inv};

  // Reference fields and synthetic observations.
  Eigen::VectorXd y_ref;
  if (binary_mode) {
    const Eigen::VectorXd f_ref = generate_reference(cfg.kernel, grid, stage_seed(kReference));
    y_ref = latent_to_y(ref_spec, f_ref);
  } else {
    y_ref = generate_reference(cfg.kernel, grid, stage_seed(kReference));
  }
  const Eigen::VectorXd u_ref = solve(op_full, y_ref);

  ObservationSet y_obs = sample_observations(y_ref, grid, cfg.n_obs_y, stage_seed(kYObs));
  if (binary_mode) {
    // Facies observations read the facies value, not the smoothed profile.
    const double mid = 0.5 * (cfg.binary_y1 + cfg.binary_y2);
    for (int i = 0; i < y_obs.size(); ++i)
      y_obs.values[i] = (y_obs.values[i] > mid) ? cfg.binary_y1 : cfg.binary_y2;
  }
  const ObservationSet u_obs = sample_observations(u_ref, grid, cfg.n_obs_u, stage_seed(kUObs));

  result.fields["y_ref"] = y_ref;
  result.fields["u_ref"] = u_ref;

  const EnsembleCache cache{cache_dir};

  InversionConfig inv_cfg;
  inv_cfg.gamma = cfg.gamma;
  inv_cfg.max_iters = cfg.inv_max_iters;
  inv_cfg.grad_tol = cfg.inv_grad_tol;
  inv_cfg.optimizer = cfg.optimizer;

  // Continuous-field PICKLE variants.
  const auto run_pickle = [&](const std::string& name, const KernelSpec& kernel_used,
                              Purpose ens_purpose, double fitted_sigma, double fitted_length) {
    const GaussianFieldModel y_model = condition(make_prior_model(grid, kernel_used), y_obs);
    TruncationRule rule;
    rule.max_terms = cfg.n_xi;
    const Ckle y_ckle = decompose(y_model, rule);
    if (y_ckle.num_terms() < cfg.n_xi)
      std::cerr << "[" << name << "] n_xi capped to " << y_ckle.num_terms()
                << " positive eigenvalues\n";

    EnsembleConfig ens_cfg;
    ens_cfg.n_ens = cfg.n_ens;
    ens_cfg.seed = stage_seed(ens_purpose);
    const GaussianFieldModel u_model =
        cache.get_or_build(y_ckle, op_full, ens_cfg, nullptr, "identity");
    const Ckle u_ckle = build_u_ckle(u_model, u_obs, cfg.n_eta);

    InversionConfig c = inv_cfg;
    c.n_xi = y_ckle.num_terms();
    c.n_eta = u_ckle.num_terms();
    const auto record = [&](const std::string& variant, const ResidualOperator& op_used) {
      const InversionResult res = invert(y_ckle, u_ckle, op_used, c);
      MethodOutcome out = outcome_from(res, y_ref);
      out.fitted_sigma = fitted_sigma;
      out.fitted_length = fitted_length;
      result.outcomes[name + "/" + variant] = out;
      result.fields["y_" + name + "_" + variant] = res.y_est;
    };
    record("full", op_full);
    if (subsampled) record("subsampled", op_sub);
  };

  if (wants("ckli")) run_pickle("ckli", cfg.kernel, kEnsembleCkli, 0.0, 0.0);
  if (wants("ckli-theta")) {
    const KernelSpec fitted = fit_hyperparameters(cfg.assumed_family, y_obs);
    run_pickle("ckli-theta", fitted, kEnsembleTheta, fitted.sigma, fitted.length);
  }

  if (binary_mode) {
    const GaussianFieldModel latent_model = classify_latent(y_obs, inv_spec, cfg.kernel, grid);
    TruncationRule rule;
    rule.max_terms = cfg.n_xi;
    const Ckle f_ckle = decompose(latent_model, rule);

    const FieldTransform to_y = [&inv_spec](const Eigen::VectorXd& f) {
      return latent_to_y(inv_spec, f);
    };
    EnsembleConfig ens_cfg;
    ens_cfg.n_ens = cfg.n_ens;
    ens_cfg.seed = stage_seed(kEnsembleBinary);
    const std::string tag = "expit," + io::format_double(inv_spec.y1) + "," +
                            io::format_double(inv_spec.y2) + "," +
                            io::format_double(inv_spec.epsilon);
    const GaussianFieldModel u_model = cache.get_or_build(f_ckle, op_full, ens_cfg, to_y, tag);
    const Ckle u_ckle = build_u_ckle(u_model, u_obs, cfg.n_eta);

    FieldParameterization y_param;
    y_param.dim = f_ckle.num_terms();
    y_param.value = [&](const Eigen::VectorXd& xi) {
      return latent_to_y(inv_spec, evaluate(f_ckle, xi));
    };
    y_param.jacobian = [&](const Eigen::VectorXd& xi) {
      const Eigen::VectorXd f = evaluate(f_ckle, xi);
      return Eigen::MatrixXd(latent_to_y_derivative(inv_spec, f).asDiagonal() * f_ckle.modes);
    };

    InversionConfig c = inv_cfg;
    c.n_xi = f_ckle.num_terms();
    c.n_eta = u_ckle.num_terms();
    const auto record = [&](const std::string& variant, const ResidualOperator& op_used) {
      const InversionResult res = invert_parameterized(y_param, u_ckle, op_used, c);
      result.outcomes["binary/" + variant] = outcome_from(res, y_ref);
      result.fields["y_binary_" + variant] = res.y_est;
    };
    record("full", op_full);
    if (subsampled) record("subsampled", op_sub);
  }

  if (wants("map")) {
    MapConfig map_cfg;
    map_cfg.gamma = cfg.gamma;
    map_cfg.max_iters = cfg.map_max_iters;
    map_cfg.grad_tol = cfg.map_grad_tol;
    const MapResult res = map_invert(y_obs, u_obs, op_full, map_cfg);
    MethodOutcome out;
    out.rel_l2 = relative_lp_error(y_ref, res.y_est, 2);
    out.rel_l1 = relative_lp_error(y_ref, res.y_est, 1);
    out.converged = res.converged;
    out.final_grad_norm = res.final_grad_norm;
    out.iterations = static_cast<int>(res.objective_history.size());
    result.outcomes["map"] = out;
    result.fields["y_map"] = res.y_est;
  }

  return result;
}

namespace {

json outcome_to_json(const MethodOutcome& out) {
  json j{{"rel_l2", out.rel_l2},
         {"rel_l1", out.rel_l1},
         {"converged", out.converged},
         {"final_grad_norm", out.final_grad_norm},
         {"iterations", out.iterations}};
  if (out.fitted_sigma > 0.0) {
    j["fitted_sigma"] = out.fitted_sigma;
    j["fitted_length"] = out.fitted_length;
  }
  return j;
}

std::vector<AggregateRow> aggregate_outcomes(const std::vector<ReplicaResult>& replicas) {
  std::map<std::string, std::map<std::string, std::vector<double>>> series;
  for (const auto& rep : replicas)
    for (const auto& [key, out] : rep.outcomes) {
      series[key]["rel_l2"].push_back(out.rel_l2);
      series[key]["rel_l1"].push_back(out.rel_l1);
    }
  std::vector<AggregateRow> rows;
  for (auto& [key, metrics] : series)
    for (auto& [metric, values] : metrics) {
      std::sort(values.begin(), values.end());
      AggregateRow row;
      row.key = key;
      row.metric = metric;
      row.median = quantile(values, 0.5);
      row.q25 = quantile(values, 0.25);
      row.q75 = quantile(values, 0.75);
      row.count = static_cast<int>(values.size());
      rows.push_back(std::move(row));
    }
  return rows;
}

std::vector<ReplicaResult> run_all_replicas(const ExperimentConfig& cfg,
                                            const RunOptions& opts) {
  std::vector<ReplicaResult> replicas(cfg.replicas);
  std::vector<std::string> errors(cfg.replicas);
  std::atomic<int> next{0};
  const int threads = std::clamp(opts.threads, 1, cfg.replicas);

  auto worker = [&]() {
    for (int k = next.fetch_add(1); k < cfg.replicas; k = next.fetch_add(1)) {
      try {
        replicas[k] = run_replica(cfg, k, opts.cache_dir);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int k = 0; k < cfg.replicas; ++k)
    if (!errors[k].empty())
      throw std::runtime_error("replica " + std::to_string(k) + " (seed " +
                               std::to_string(rng::derive_seed(cfg.seed, k, 0)) +
                               ") failed: " + errors[k]);
  return replicas;
}

void write_report_csv(const std::filesystem::path& path,
                      const std::vector<AggregateRow>& rows, const io::Provenance& prov) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os << "# config=" << prov.config_hash << " seed=" << prov.seed
     << " version=" << prov.version << "\n";
  os << "method,metric,median,q25,q75,count\n";
  for (const auto& row : rows)
    os << row.key << ',' << row.metric << ',' << io::format_double(row.median) << ','
       << io::format_double(row.q25) << ',' << io::format_double(row.q75) << ','
       << row.count << '\n';
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  ExperimentReport report;
  report.run_id = cfg.hash() + "-s" + std::to_string(cfg.seed);
  report.replicas = run_all_replicas(cfg, opts);
  report.aggregate = aggregate_outcomes(report.replicas);

  if (opts.write_artifacts) {
    const io::Provenance prov{cfg.hash(), cfg.seed, kVersion};
    const auto run_dir = opts.output_dir / report.run_id;
    const auto fields_dir = run_dir / "fields";
    std::filesystem::create_directories(fields_dir);

    const Grid grid = build_grid(cfg.nx, cfg.ny);
    for (const auto& rep : report.replicas) {
      json j;
      j["config_hash"] = prov.config_hash;
      j["seed"] = cfg.seed;
      j["replica"] = rep.replica;
      j["replica_seed"] = rep.replica_seed;
      j["version"] = kVersion;
      json methods;
      for (const auto& [key, out] : rep.outcomes) methods[key] = outcome_to_json(out);
      j["methods"] = methods;
      std::ofstream os(run_dir / ("replica_" + std::to_string(rep.replica) + ".json"));
      os << j.dump(2) << '\n';

      for (const auto& [name, field] : rep.fields)
        io::write_field_csv(
            fields_dir / ("replica" + std::to_string(rep.replica) + "_" + name + ".csv"),
            grid, field, &prov);
    }
    write_report_csv(run_dir / "report.csv", report.aggregate, prov);
  }
  return report;
}

std::vector<SweepRow> sweep_nxi(const ExperimentConfig& cfg, const std::vector<int>& nxi_values,
                                const RunOptions& opts) {
  cfg.validate();
  if (nxi_values.empty()) throw std::invalid_argument("sweep_nxi: no values given");

  std::vector<SweepRow> rows;
  for (int nxi : nxi_values) {
    ExperimentConfig sweep_cfg = cfg;
    sweep_cfg.n_xi = nxi;
    RunOptions sub_opts = opts;
    sub_opts.write_artifacts = false;
    const ExperimentReport report = run_experiment(sweep_cfg, sub_opts);
    for (const auto& agg : report.aggregate) {
      if (agg.metric != "rel_l2") continue;
      SweepRow row;
      row.n_xi = nxi;
      row.key = agg.key;
      row.median = agg.median;
      row.q25 = agg.q25;
      row.q75 = agg.q75;
      rows.push_back(std::move(row));
    }
  }

  if (opts.write_artifacts) {
    const io::Provenance prov{cfg.hash(), cfg.seed, kVersion};
    const auto run_dir = opts.output_dir / (cfg.hash() + "-s" + std::to_string(cfg.seed));
    std::filesystem::create_directories(run_dir);
    std::ofstream os(run_dir / "sweep.csv");
    os << "# config=" << prov.config_hash << " seed=" << prov.seed
       << " version=" << prov.version << "\n";
    os << "n_xi,method,median_rel_l2,q25,q75\n";
    for (const auto& row : rows)
      os << row.n_xi << ',' << row.key << ',' << io::format_double(row.median) << ','
         << io::format_double(row.q25) << ',' << io::format_double(row.q75) << '\n';
  }
  return rows;
}

}  // namespace pickle
