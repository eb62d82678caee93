#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "loggas/chebyshev.hpp"
#include "loggas/error.hpp"
#include "loggas/master_op.hpp"
#include "loggas/measure.hpp"
#include "loggas/sampler.hpp"
#include "loggas/version.hpp"

namespace loggas::io {

// every artifact carries the tool version and the config hash in its header
struct FileStamp {
  std::uint64_t config_hash = 0;
};

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string stamp_line(const FileStamp& s) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "# tool %s config %016llx", kToolVersion,
                static_cast<unsigned long long>(s.config_hash));
  return buf;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::io_error, what);
}

// --- measure files ------------------------------------------------------------

inline void save_measure(const std::string& path, const EquilibriumMeasure& m,
                         const FileStamp& stamp) {
  std::ofstream f(path);
  require(f.good(), "cannot open '" + path + "' for writing");
  f << "# loggas-measure v1\n" << stamp_line(stamp) << "\n";
  f << "name " << m.name() << "\n";
  f << "form " << (m.sigma_form() ? "sigma" : "plain") << "\n";
  f << "intervals " << m.support().size() << "\n";
  for (const auto& iv : m.support())
    f << fmt17(iv.lo) << " " << fmt17(iv.hi) << "\n";
  f << "singular " << m.singular_points().size() << "\n";
  for (const auto& sp : m.singular_points())
    f << fmt17(sp.position) << " " << sp.order << "\n";
  f << "c_V " << fmt17(m.c_V()) << "\n";
  f << "I_V " << fmt17(m.energy_value()) << "\n";
  f << "nodes " << m.parts()[0].grid.n << "\n";
  f << "# node weight density\n";
  for (const auto& p : m.parts())
    for (int j = 0; j < p.grid.n; ++j)
      f << fmt17(p.grid.x[j]) << " " << fmt17(p.leb_w[j]) << " "
        << fmt17(p.rho[j]) << "\n";
}

inline EquilibriumMeasure load_measure(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open '" + path + "'");
  std::string line;
  std::getline(f, line);
  require(line.rfind("# loggas-measure v1", 0) == 0,
          "'" + path + "' is not a loggas-measure v1 file");
  auto next_tokens = [&](const std::string& key) {
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string k;
      ss >> k;
      require(k == key, "expected '" + key + "', found '" + k + "'");
      return std::string(line.substr(k.size()));
    }
    throw Error(ErrorCode::io_error, "truncated measure file: missing " + key);
  };
  std::string name;
  {
    std::istringstream ss(next_tokens("name"));
    ss >> name;
  }
  std::string form;
  {
    std::istringstream ss(next_tokens("form"));
    ss >> form;
  }
  int n_iv = 0;
  {
    std::istringstream ss(next_tokens("intervals"));
    ss >> n_iv;
  }
  std::vector<Interval> ivs(n_iv);
  for (auto& iv : ivs) {
    std::getline(f, line);
    std::istringstream ss(line);
    ss >> iv.lo >> iv.hi;
  }
  int n_sp = 0;
  {
    std::istringstream ss(next_tokens("singular"));
    ss >> n_sp;
  }
  std::vector<SingularPoint> sps(n_sp);
  for (auto& sp : sps) {
    std::getline(f, line);
    std::istringstream ss(line);
    ss >> sp.position >> sp.order;
  }
  double c_V, I_V;
  {
    std::istringstream ss(next_tokens("c_V"));
    ss >> c_V;
  }
  {
    std::istringstream ss(next_tokens("I_V"));
    ss >> I_V;
  }
  int nodes = 0;
  {
    std::istringstream ss(next_tokens("nodes"));
    ss >> nodes;
  }
  std::vector<std::vector<double>> rho(n_iv);
  for (int l = 0; l < n_iv; ++l) {
    rho[l].resize(nodes);
    for (int j = 0; j < nodes; ++j) {
      do {
        require(static_cast<bool>(std::getline(f, line)), "truncated node table");
      } while (line.empty() || line[0] == '#');
      std::istringstream ss(line);
      double x, w;
      ss >> x >> w >> rho[l][j];
    }
  }
  bool sigma_form = (form == "sigma");
  // rebuild the density from an interpolant of the stored node values;
  // for sigma form, interpolate the smooth ratio rho / sigma
  std::vector<cheb::Series> interp(n_iv);
  auto sigma_all = [ivs](double x) {
    double s = 1.0;
    for (const auto& iv : ivs)
      s *= std::sqrt(std::abs(x - iv.lo) * std::abs(x - iv.hi));
    return s;
  };
  for (int l = 0; l < n_iv; ++l) {
    auto g = cheb::Grid::make(ivs[l].lo, ivs[l].hi, nodes);
    std::vector<double> vals(nodes);
    for (int j = 0; j < nodes; ++j)
      vals[j] = sigma_form ? rho[l][j] / sigma_all(g.x[j]) : rho[l][j];
    interp[l] = cheb::interpolate(g, vals);
  }
  auto dens = [ivs, interp, sigma_all, sigma_form](double x) {
    for (size_t l = 0; l < ivs.size(); ++l)
      if (ivs[l].contains(x)) {
        double v = interp[l].eval(x);
        return sigma_form ? v * sigma_all(x) : v;
      }
    return 0.0;
  };
  EquilibriumMeasure m = EquilibriumMeasure::build(
      name, ivs, dens, sps, nullptr, nodes, sigma_form, nullptr);
  m.set_constants(c_V, I_V);
  return m;
}

// --- transport map ------------------------------------------------------------

inline void save_psi(const std::string& path, const TransportMap& t,
                     const FileStamp& stamp) {
  std::ofstream f(path);
  require(f.good(), "cannot open '" + path + "' for writing");
  f << "# loggas-psi v1\n" << stamp_line(stamp) << "\n";
  f << "# U " << fmt17(t.U().lo) << " " << fmt17(t.U().hi) << " t_max "
    << fmt17(t.t_max()) << "\n";
  f << "# node psi dpsi c_xi\n";
  for (const auto& p : t.pieces()) {
    for (int j = 0; j < 64; ++j) {
      double x = p.iv.lo + (p.iv.hi - p.iv.lo) * (j + 0.5) / 64.0;
      f << fmt17(x) << " " << fmt17(t.psi(x)) << " " << fmt17(t.dpsi(x)) << " "
        << fmt17(t.c_xi()) << "\n";
    }
  }
}

// --- potential samples ----------------------------------------------------------

inline Potential load_potential_file(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open '" + path + "'");
  std::string line;
  std::getline(f, line);
  require(line.rfind("# loggas-potential v1", 0) == 0,
          "'" + path + "' is not a loggas-potential v1 file");
  std::vector<double> xs, vs;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double x, v;
    if (ss >> x >> v) {
      xs.push_back(x);
      vs.push_back(v);
    }
  }
  return potential_from_samples(xs, vs, path);
}

inline void save_potential_samples(const std::string& path,
                                   const std::vector<double>& xs,
                                   const std::vector<double>& vs) {
  std::ofstream f(path);
  require(f.good(), "cannot open '" + path + "' for writing");
  f << "# loggas-potential v1\n";
  for (size_t i = 0; i < xs.size(); ++i)
    f << fmt17(xs[i]) << " " << fmt17(vs[i]) << "\n";
}

// --- sample streams ------------------------------------------------------------

inline void save_samples_csv(const std::string& path,
                             const std::vector<Configuration>& samples,
                             const FileStamp& stamp) {
  std::ofstream f(path);
  require(f.good(), "cannot open '" + path + "' for writing");
  f << "# loggas-samples v1\n" << stamp_line(stamp) << "\n";
  f << "sweep,chain";
  int N = samples.empty() ? 0 : samples.front().N();
  for (int i = 1; i <= N; ++i) f << ",x_" << i;
  f << "\n";
  for (const auto& c : samples) {
    f << c.sweep << "," << c.chain;
    for (double x : c.positions) f << "," << fmt17(x);
    f << "\n";
  }
}

// binary frames: magic LGS1, u32 version, u64 config hash, u64 N,
// then per frame u64 sweep, u64 chain, N little-endian doubles
inline void save_samples_binary(const std::string& path,
                                const std::vector<Configuration>& samples,
                                const FileStamp& stamp) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot open '" + path + "' for writing");
  f.write("LGS1", 4);
  std::uint32_t version = 1;
  std::uint64_t N = samples.empty() ? 0 : samples.front().positions.size();
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&stamp.config_hash), 8);
  f.write(reinterpret_cast<const char*>(&N), 8);
  for (const auto& c : samples) {
    std::uint64_t sweep = static_cast<std::uint64_t>(c.sweep);
    std::uint64_t chain = static_cast<std::uint64_t>(c.chain);
    f.write(reinterpret_cast<const char*>(&sweep), 8);
    f.write(reinterpret_cast<const char*>(&chain), 8);
    f.write(reinterpret_cast<const char*>(c.positions.data()),
            static_cast<std::streamsize>(8 * c.positions.size()));
  }
}

inline std::vector<Configuration> load_samples_binary(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), "cannot open '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  require(std::memcmp(magic, "LGS1", 4) == 0, "bad magic in '" + path + "'");
  std::uint32_t version;
  std::uint64_t hash, N;
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&hash), 8);
  f.read(reinterpret_cast<char*>(&N), 8);
  std::vector<Configuration> out;
  for (;;) {
    std::uint64_t sweep, chain;
    f.read(reinterpret_cast<char*>(&sweep), 8);
    if (!f.good()) break;
    f.read(reinterpret_cast<char*>(&chain), 8);
    Configuration c;
    c.positions.resize(N);
    f.read(reinterpret_cast<char*>(c.positions.data()),
           static_cast<std::streamsize>(8 * N));
    c.sweep = static_cast<long>(sweep);
    c.chain = static_cast<int>(chain);
    out.push_back(std::move(c));
  }
  return out;
}

// --- verdicts and histograms ------------------------------------------------------

struct VerdictRow {
  std::string potential, xi;
  int N = 0;
  double beta = 0.0;
  double m_pred = 0.0, m_emp = 0.0, m_err = 0.0;
  double v_pred = 0.0, v_emp = 0.0, v_err = 0.0;
  double ks_p = 0.0;
};

inline void save_verdicts(const std::string& path,
                          const std::vector<VerdictRow>& rows,
                          const FileStamp& stamp) {
  std::ofstream f(path);
  require(f.good(), "cannot open '" + path + "' for writing");
  f << "# loggas-verdict v1\n" << stamp_line(stamp) << "\n";
  f << "potential,xi,N,beta,m_pred,m_emp,m_err,v_pred,v_emp,v_err,ks_p\n";
  for (const auto& r : rows) {
    f << r.potential << "," << r.xi << "," << r.N << "," << fmt17(r.beta) << ","
      << fmt17(r.m_pred) << "," << fmt17(r.m_emp) << "," << fmt17(r.m_err)
      << "," << fmt17(r.v_pred) << "," << fmt17(r.v_emp) << "," << fmt17(r.v_err)
      << "," << fmt17(r.ks_p) << "\n";
  }
}

inline void save_histogram(const std::string& path,
                           const std::vector<stats::HistogramRow>& rows,
                           const FileStamp& stamp) {
  std::ofstream f(path);
  require(f.good(), "cannot open '" + path + "' for writing");
  f << "# loggas-histogram v1\n" << stamp_line(stamp) << "\n";
  f << "bin_left,bin_right,count,gaussian_pdf_at_center\n";
  for (const auto& r : rows)
    f << fmt17(r.bin_left) << "," << fmt17(r.bin_right) << "," << r.count << ","
      << fmt17(r.gaussian_pdf_at_center) << "\n";
}

}  // namespace loggas::io
