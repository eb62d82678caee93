#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "loggas/error.hpp"

namespace loggas {

// Flat key-value configuration with sections. Every field has a default
// except the potential and the test function; the canonical serialization
// round-trips through the parser byte for byte.
struct ExperimentConfig {
  // [potential]
  std::string potential_name;
  std::string potential_file;
  // [xi]
  std::vector<double> xi_coeffs;
  std::string xi_file;
  // [equilibrium]
  double window_lo = -4.0;
  double window_hi = 4.0;
  int grid_nodes = 2048;
  int cheb_nodes = 256;
  std::string measure_source = "catalog";  // catalog | solve | file
  std::string measure_file;
  // [run]
  std::vector<double> beta_list{2.0};
  std::vector<int> n_list{64};
  std::uint64_t seed = 1;
  int workers = 1;
  // [sampler]
  std::string sampler = "mcmc";  // mcmc | tridiagonal
  long sweeps = 20000;
  long burn_in = 2000;
  int thinning = 10;
  int chains = 4;
  long draws = 10000;  // tridiagonal draws per cell
  // [laplace]
  std::vector<double> s_grid;
  // [output]
  std::string out_dir = "out";
  std::string sample_format = "csv";  // csv | binary
  // [tolerances]
  double tolerance_scale = 1.0;
};

namespace detail_cfg {

inline std::string join(const std::vector<double>& v) {
  std::ostringstream ss;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) ss << " ";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    ss << buf;
  }
  return ss.str();
}

inline std::string join(const std::vector<int>& v) {
  std::ostringstream ss;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) ss << " ";
    ss << v[i];
  }
  return ss.str();
}

inline std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  double v;
  while (ss >> v) out.push_back(v);
  return out;
}

inline std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  std::istringstream ss(s);
  int v;
  while (ss >> v) out.push_back(v);
  return out;
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace detail_cfg

inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream f;
  char buf[64];
  f << "[potential]\n";
  f << "name = " << c.potential_name << "\n";
  f << "file = " << c.potential_file << "\n";
  f << "[xi]\n";
  f << "coeffs = " << detail_cfg::join(c.xi_coeffs) << "\n";
  f << "file = " << c.xi_file << "\n";
  f << "[equilibrium]\n";
  std::snprintf(buf, sizeof buf, "%.17g", c.window_lo);
  f << "window_lo = " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", c.window_hi);
  f << "window_hi = " << buf << "\n";
  f << "grid_nodes = " << c.grid_nodes << "\n";
  f << "cheb_nodes = " << c.cheb_nodes << "\n";
  f << "measure_source = " << c.measure_source << "\n";
  f << "measure_file = " << c.measure_file << "\n";
  f << "[run]\n";
  f << "beta_list = " << detail_cfg::join(c.beta_list) << "\n";
  f << "n_list = " << detail_cfg::join(c.n_list) << "\n";
  f << "seed = " << c.seed << "\n";
  f << "workers = " << c.workers << "\n";
  f << "[sampler]\n";
  f << "method = " << c.sampler << "\n";
  f << "sweeps = " << c.sweeps << "\n";
  f << "burn_in = " << c.burn_in << "\n";
  f << "thinning = " << c.thinning << "\n";
  f << "chains = " << c.chains << "\n";
  f << "draws = " << c.draws << "\n";
  f << "[laplace]\n";
  f << "s_grid = " << detail_cfg::join(c.s_grid) << "\n";
  f << "[output]\n";
  f << "dir = " << c.out_dir << "\n";
  f << "sample_format = " << c.sample_format << "\n";
  f << "[tolerances]\n";
  std::snprintf(buf, sizeof buf, "%.17g", c.tolerance_scale);
  f << "scale = " << buf << "\n";
  return f.str();
}

inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::istringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = detail_cfg::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::config_invalid,
                  "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = detail_cfg::trim(line.substr(0, eq));
    std::string val = detail_cfg::trim(line.substr(eq + 1));
    std::string id = section + "." + key;
    if (id == "potential.name") c.potential_name = val;
    else if (id == "potential.file") c.potential_file = val;
    else if (id == "xi.coeffs") c.xi_coeffs = detail_cfg::parse_doubles(val);
    else if (id == "xi.file") c.xi_file = val;
    else if (id == "equilibrium.window_lo") c.window_lo = std::stod(val);
    else if (id == "equilibrium.window_hi") c.window_hi = std::stod(val);
    else if (id == "equilibrium.grid_nodes") c.grid_nodes = std::stoi(val);
    else if (id == "equilibrium.cheb_nodes") c.cheb_nodes = std::stoi(val);
    else if (id == "equilibrium.measure_source") c.measure_source = val;
    else if (id == "equilibrium.measure_file") c.measure_file = val;
    else if (id == "run.beta_list") c.beta_list = detail_cfg::parse_doubles(val);
    else if (id == "run.n_list") c.n_list = detail_cfg::parse_ints(val);
    else if (id == "run.seed") c.seed = std::stoull(val);
    else if (id == "run.workers") c.workers = std::stoi(val);
    else if (id == "sampler.method") c.sampler = val;
    else if (id == "sampler.sweeps") c.sweeps = std::stol(val);
    else if (id == "sampler.burn_in") c.burn_in = std::stol(val);
    else if (id == "sampler.thinning") c.thinning = std::stoi(val);
    else if (id == "sampler.chains") c.chains = std::stoi(val);
    else if (id == "sampler.draws") c.draws = std::stol(val);
    else if (id == "laplace.s_grid") c.s_grid = detail_cfg::parse_doubles(val);
    else if (id == "output.dir") c.out_dir = val;
    else if (id == "output.sample_format") c.sample_format = val;
    else if (id == "tolerances.scale") c.tolerance_scale = std::stod(val);
    else
      throw Error(ErrorCode::config_invalid, "unknown key '" + id + "'");
  }
  return c;
}

// The worker count is execution machinery, not experiment identity: it is
// normalized out so artifacts stay bit-identical across 1..n workers.
inline std::uint64_t config_hash(const ExperimentConfig& c) {
  ExperimentConfig canon = c;
  canon.workers = 0;
  std::string s = serialize_config(canon);
  std::uint64_t h = 14695981039346656037ULL;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_schema() {
  return
      "# loggas experiment configuration (flat key = value, by section)\n"
      "[potential]\n"
      "name = <catalog id: gaussian | bulk_critical_quartic |\n"
      "        edge_critical_quartic | two_cut_quartic(t)>   # or use file\n"
      "file = <path to '# loggas-potential v1' two-column samples>\n"
      "[xi]\n"
      "coeffs = <polynomial coefficients a0 a1 a2 ...>\n"
      "file = <path to two-column samples>                   # alternative\n"
      "[equilibrium]\n"
      "window_lo / window_hi = <solver window, must contain the support>\n"
      "grid_nodes = <uniform minimization cells, >= 512>\n"
      "cheb_nodes = <nodes per support interval of the stored measure>\n"
      "measure_source = catalog | solve | file\n"
      "measure_file = <path when measure_source = file>\n"
      "[run]\n"
      "beta_list = <inverse temperatures>\n"
      "n_list = <particle counts>\n"
      "seed = <master 64-bit seed; per-cell streams are derived>\n"
      "workers = <thread count; LOGGAS_WORKERS overrides when unset>\n"
      "[sampler]\n"
      "method = mcmc | tridiagonal\n"
      "sweeps / burn_in / thinning / chains = <metropolis settings>\n"
      "draws = <tridiagonal draws per cell>\n"
      "[laplace]\n"
      "s_grid = <log-Laplace probe points; empty uses the scaled default>\n"
      "[output]\n"
      "dir = <artifact directory>\n"
      "sample_format = csv | binary\n"
      "[tolerances]\n"
      "scale = <multiplies every certification threshold>\n";
}

}  // namespace loggas
