#ifndef PICKLE_IO_HPP
#define PICKLE_IO_HPP

#include <filesystem>
#include <string>

#include "pickle/gpr.hpp"
#include "pickle/kle.hpp"

namespace pickle::io {

/// Provenance line written at the top of every CSV artifact.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
};

/// Observations as CSV with header x1,x2,value[,noise_var].  The optional
/// column carries per-row noise variances (diagonal error covariance).
ObservationSet read_observations(const std::filesystem::path& path);
void write_observations(const std::filesystem::path& path, const ObservationSet& obs,
                        const Provenance* prov = nullptr);

/// Field vector as a row-major nx-by-ny CSV grid: ny lines of nx values,
/// line j holding cells (0..nx-1, j).  '.' decimal, locale-independent.
void write_field_csv(const std::filesystem::path& path, const Grid& grid,
                     const Eigen::VectorXd& field, const Provenance* prov = nullptr);
Eigen::VectorXd read_field_csv(const std::filesystem::path& path, const Grid& grid);

/// Binary cache artifacts (little-endian doubles, magic-tagged).
void save_ckle(const std::filesystem::path& path, const Ckle& ckle);
Ckle load_ckle(const std::filesystem::path& path);
void save_field_model(const std::filesystem::path& path, const GaussianFieldModel& model);
GaussianFieldModel load_field_model(const std::filesystem::path& path);

/// FNV-1a hash of a string, rendered as fixed-width hex; used for config
/// provenance and cache keys.
std::string fnv1a_hex(const std::string& data);

/// Locale-independent full-precision formatting of a double.
std::string format_double(double v);

}  // namespace pickle::io

#endif
