#include "pickle/io.hpp"

#include <array>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pickle::io {

namespace {

void write_provenance(std::ostream& os, const Provenance* prov) {
  if (!prov) return;
  os << "# config=" << prov->config_hash << " seed=" << prov->seed
     << " version=" << prov->version << "\n";
}

double parse_double(const std::string& token, const std::filesystem::path& path) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw std::runtime_error("CSV parse error in " + path.string() + ": bad number '" +
                             token + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string token;
  while (std::getline(ss, token, ',')) out.push_back(token);
  return out;
}

struct BinaryWriter {
  std::ofstream os;
  explicit BinaryWriter(const std::filesystem::path& path)
      : os(path, std::ios::binary) {
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  }
  void magic(const char* tag) { os.write(tag, 8); }
  void u64(std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
  void doubles(const double* data, std::size_t n) {
    os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(8 * n));
  }
};

struct BinaryReader {
  std::ifstream is;
  std::filesystem::path path;
  explicit BinaryReader(const std::filesystem::path& p) : is(p, std::ios::binary), path(p) {
    if (!is) throw std::runtime_error("cannot open for reading: " + p.string());
  }
  void magic(const char* tag) {
    char buf[8];
    is.read(buf, 8);
    if (!is || std::memcmp(buf, tag, 8) != 0)
      throw std::runtime_error("bad magic in " + path.string());
  }
  std::uint64_t u64() {
    std::uint64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    if (!is) throw std::runtime_error("truncated file: " + path.string());
    return v;
  }
  void doubles(double* data, std::size_t n) {
    is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(8 * n));
    if (!is) throw std::runtime_error("truncated file: " + path.string());
  }
};

Grid grid_from_dims(std::uint64_t nx, std::uint64_t ny) {
  return build_grid(static_cast<int>(nx), static_cast<int>(ny));
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

ObservationSet read_observations(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open observations file: " + path.string());
  std::string line;
  bool header_seen = false;
  bool has_noise = false;
  std::vector<std::array<double, 4>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tokens = split_csv_line(line);
    if (!header_seen) {
      if (tokens.size() < 3 || tokens[0] != "x1" || tokens[1] != "x2" || tokens[2] != "value")
        throw std::runtime_error("observations CSV must start with header x1,x2,value: " +
                                 path.string());
      has_noise = tokens.size() >= 4 && tokens[3] == "noise_var";
      header_seen = true;
      continue;
    }
    if (tokens.size() < (has_noise ? 4u : 3u))
      throw std::runtime_error("short CSV row in " + path.string());
    std::array<double, 4> row{};
    for (std::size_t c = 0; c < (has_noise ? 4u : 3u); ++c)
      row[c] = parse_double(tokens[c], path);
    rows.push_back(row);
  }
  if (!header_seen) throw std::runtime_error("empty observations file: " + path.string());

  const int n = static_cast<int>(rows.size());
  ObservationSet obs;
  obs.locations.resize(n, 2);
  obs.values.resize(n);
  obs.noise_cov = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    obs.locations(i, 0) = rows[i][0];
    obs.locations(i, 1) = rows[i][1];
    obs.values[i] = rows[i][2];
    if (has_noise) obs.noise_cov(i, i) = rows[i][3];
  }
  return obs;
}

void write_observations(const std::filesystem::path& path, const ObservationSet& obs,
                        const Provenance* prov) {
  obs.validate();
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  write_provenance(os, prov);
  const bool has_noise = obs.noise_cov.size() > 0 && obs.noise_cov.diagonal().any();
  os << (has_noise ? "x1,x2,value,noise_var\n" : "x1,x2,value\n");
  for (int i = 0; i < obs.size(); ++i) {
    os << format_double(obs.locations(i, 0)) << ',' << format_double(obs.locations(i, 1))
       << ',' << format_double(obs.values[i]);
    if (has_noise) os << ',' << format_double(obs.noise_cov(i, i));
    os << '\n';
  }
}

void write_field_csv(const std::filesystem::path& path, const Grid& grid,
                     const Eigen::VectorXd& field, const Provenance* prov) {
  if (field.size() != grid.num_cells())
    throw std::invalid_argument("write_field_csv: field size mismatch");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  write_provenance(os, prov);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      if (i) os << ',';
      os << format_double(field[grid.linear_index(i, j)]);
    }
    os << '\n';
  }
}

Eigen::VectorXd read_field_csv(const std::filesystem::path& path, const Grid& grid) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open field file: " + path.string());
  Eigen::VectorXd field(grid.num_cells());
  std::string line;
  int j = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (j >= grid.ny) throw std::runtime_error("too many rows in " + path.string());
    const auto tokens = split_csv_line(line);
    if (static_cast<int>(tokens.size()) != grid.nx)
      throw std::runtime_error("wrong column count in " + path.string());
    for (int i = 0; i < grid.nx; ++i)
      field[grid.linear_index(i, j)] = parse_double(tokens[i], path);
    ++j;
  }
  if (j != grid.ny) throw std::runtime_error("too few rows in " + path.string());
  return field;
}

void save_ckle(const std::filesystem::path& path, const Ckle& ckle) {
  BinaryWriter w(path);
  w.magic("PKLCKLE1");
  w.u64(static_cast<std::uint64_t>(ckle.grid.nx));
  w.u64(static_cast<std::uint64_t>(ckle.grid.ny));
  w.u64(static_cast<std::uint64_t>(ckle.num_terms()));
  w.doubles(&ckle.total_spectrum, 1);
  w.doubles(ckle.mean.data(), ckle.mean.size());
  w.doubles(ckle.eigenvalues.data(), ckle.eigenvalues.size());
  w.doubles(ckle.modes.data(), static_cast<std::size_t>(ckle.modes.size()));
}

Ckle load_ckle(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.magic("PKLCKLE1");
  Ckle ckle;
  const auto nx = r.u64(), ny = r.u64(), m = r.u64();
  ckle.grid = grid_from_dims(nx, ny);
  const auto n = ckle.grid.num_cells();
  r.doubles(&ckle.total_spectrum, 1);
  ckle.mean.resize(n);
  r.doubles(ckle.mean.data(), n);
  ckle.eigenvalues.resize(static_cast<Eigen::Index>(m));
  r.doubles(ckle.eigenvalues.data(), m);
  ckle.modes.resize(n, static_cast<Eigen::Index>(m));
  r.doubles(ckle.modes.data(), static_cast<std::size_t>(ckle.modes.size()));
  return ckle;
}

void save_field_model(const std::filesystem::path& path, const GaussianFieldModel& model) {
  model.validate();
  BinaryWriter w(path);
  w.magic("PKLGFM01");
  w.u64(static_cast<std::uint64_t>(model.grid.nx));
  w.u64(static_cast<std::uint64_t>(model.grid.ny));
  w.doubles(model.mean.data(), model.mean.size());
  w.doubles(model.cov.data(), static_cast<std::size_t>(model.cov.size()));
}

GaussianFieldModel load_field_model(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.magic("PKLGFM01");
  GaussianFieldModel model;
  model.grid = grid_from_dims(r.u64(), r.u64());
  const auto n = model.grid.num_cells();
  model.mean.resize(n);
  r.doubles(model.mean.data(), n);
  model.cov.resize(n, n);
  r.doubles(model.cov.data(), static_cast<std::size_t>(model.cov.size()));
  return model;
}

}  // namespace pickle::io
