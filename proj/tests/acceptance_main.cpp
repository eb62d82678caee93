// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every tolerance is pinned here, in code.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "loggas/clt.hpp"
#include "loggas/config.hpp"
#include "loggas/io.hpp"
#include "loggas/master_op.hpp"
#include "loggas/measure.hpp"
#include "loggas/potential.hpp"
#include "loggas/sampler.hpp"
#include "loggas/solver.hpp"

using namespace loggas;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

TestFunction poly(std::initializer_list<double> c) {
  return TestFunction::from_polynomial(Polynomial(c));
}

double exact_density(const std::string& name, double x) {
  double edge = std::max(4.0 - x * x, 0.0);
  if (name == "gaussian") return std::sqrt(edge) / (2.0 * M_PI);
  if (name == "bulk_critical_quartic") return x * x * std::sqrt(edge) / (2.0 * M_PI);
  if (name == "edge_critical_quartic")
    return (x - 2.0) * (x - 2.0) * std::sqrt(edge) / (10.0 * M_PI);
  if (name.rfind("two_cut_quartic", 0) == 0) {
    double q = (x * x - 1.0) * (5.0 - x * x);  // t = 3/2
    return q > 0 ? std::abs(x) * std::sqrt(q) / (2.0 * M_PI) : 0.0;
  }
  return 0.0;
}

struct Solved {
  std::string name;
  EquilibriumMeasure measure;
  SolveDiagnostics diag;
  double seconds = 0.0;
  double l1 = 0.0;
};

std::vector<Solved> g_solved;

// --- criteria 1 and 2: solver accuracy and certification ------------------------

void criterion_1_and_2() {
  struct Case {
    const char* name;
    Interval window;
  };
  const Case cases[] = {{"gaussian", {-3.5, 3.5}},
                        {"bulk_critical_quartic", {-3.5, 3.5}},
                        {"edge_critical_quartic", {-3.5, 3.5}},
                        {"two_cut_quartic(1.5)", {-3.2, 3.2}}};
  bool l1_pass = true, time_pass = true;
  std::string detail1 = "solver L1 at 2048 nodes:";
  for (const Case& cs : cases) {
    auto t0 = std::chrono::steady_clock::now();
    SolveOptions opt;
    opt.window = cs.window;
    opt.nodes = 2048;
    Solved s;
    s.name = cs.name;
    try {
      s.measure = solve_equilibrium(catalog(cs.name), opt, &s.diag);
    } catch (const Error& e) {
      report(1, false, std::string("solver failed on ") + cs.name + ": " + e.what());
      report(2, false, "no solves to certify");
      return;
    }
    auto t1 = std::chrono::steady_clock::now();
    s.seconds = std::chrono::duration<double>(t1 - t0).count();
    double dx = s.diag.grid_x[1] - s.diag.grid_x[0];
    for (double x : s.diag.grid_x)
      s.l1 += std::abs(s.measure.density(x) - exact_density(cs.name, x)) * dx;
    if (std::string(cs.name).rfind("two_cut", 0) != 0) {
      // the three named densities carry the threshold; two-cut is extra scope
      if (s.l1 >= 1e-3) l1_pass = false;
      if (s.seconds >= 60.0) time_pass = false;
      char buf[128];
      std::snprintf(buf, sizeof buf, " %s %.2e (%.1fs)", cs.name, s.l1, s.seconds);
      detail1 += buf;
    }
    g_solved.push_back(std::move(s));
  }
  report(1, l1_pass && time_pass, detail1 + (time_pass ? "" : " [over time budget]"));

  bool el_pass = true;
  std::string detail2 = "euler-lagrange on solves:";
  for (const Solved& s : g_solved) {
    Potential V = catalog(s.name);
    ZetaReport rep = verify_euler_lagrange(s.measure, V);
    double thr = 1e-4 * (1.0 + std::abs(s.measure.c_V()));
    bool ok = rep.max_abs_on_support < thr && rep.min_off_support > 0.0;
    if (!ok) el_pass = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, " %s max|zeta|=%.2e (thr %.2e) min_off=%.2e",
                  s.name.c_str(), rep.max_abs_on_support, thr, rep.min_off_support);
    detail2 += buf;
  }
  report(2, el_pass, detail2);
}

// --- criterion 3: splitting identity --------------------------------------------

void criterion_3() {
  bool pass = true;
  double worst = 0.0;
  std::string worst_at;
  for (const char* name : {"gaussian", "bulk_critical_quartic",
                           "edge_critical_quartic", "two_cut_quartic(1.5)"}) {
    EquilibriumMeasure m = catalog_measure(name);
    Potential V = catalog(name);
    Rng rng(derive_seed(31337, std::hash<std::string>{}(name)));
    double lo = m.support().front().lo - 0.2;
    double hi = m.support().back().hi + 0.2;
    for (int N : {8, 64}) {
      for (int trial = 0; trial < 100; ++trial) {
        Configuration c;
        for (int i = 0; i < N; ++i) c.positions.push_back(rng.uniform(lo, hi));
        std::sort(c.positions.begin(), c.positions.end());
        double rel = splitting_gap(c, V, m) / (static_cast<double>(N) * N);
        if (rel > worst) {
          worst = rel;
          worst_at = std::string(name) + " N=" + std::to_string(N);
        }
        if (rel >= 1e-5) pass = false;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "splitting gap / N^2 worst %.2e at %s (100 configs, N in {8,64})",
                worst, worst_at.c_str());
  report(3, pass, buf);
}

// --- criterion 4: operator round trip ---------------------------------------------

double roundtrip_sup(const TestFunction& xi, const EquilibriumMeasure& m,
                     const Potential& V, const TransportMap& t) {
  double worst = 0.0;
  for (const auto& p : m.parts())
    for (int j = 0; j < p.grid.n; ++j) {
      double x = p.grid.x[j];
      worst = std::max(worst, std::abs(apply_master_operator(m, V, t, x) -
                                       0.5 * xi(x, 0) - t.c_xi()));
    }
  return worst;
}

void criterion_4() {
  bool pass = true;
  std::string detail = "round trip sup:";
  EquilibriumMeasure mg = catalog_measure("gaussian");
  Potential Vg = catalog("gaussian");
  struct XiCase {
    const char* label;
    TestFunction xi;
  };
  std::vector<XiCase> gaussian_cases;
  gaussian_cases.push_back({"x", poly({0, 1})});
  gaussian_cases.push_back({"x^2", poly({0, 0, 1})});
  gaussian_cases.push_back({"x^3", poly({0, 0, 0, 1})});
  gaussian_cases.push_back({"x^4-2x^2", poly({0, 0, -2, 0, 1})});
  for (auto& cs : gaussian_cases) {
    TransportMap t = invert_master_operator(cs.xi, mg, Vg);
    double norm = detail_op::sup_norm(cs.xi, mg);
    double sup = roundtrip_sup(cs.xi, mg, Vg, t);
    if (sup >= 1e-5 * (1.0 + norm)) pass = false;
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s %.1e", cs.label, sup);
    detail += buf;
  }
  EquilibriumMeasure mb = catalog_measure("bulk_critical_quartic");
  Potential Vb = catalog("bulk_critical_quartic");
  TestFunction cubic = poly({0, -2, 0, 1});
  TransportMap tb = invert_master_operator(cubic, mb, Vb);
  double supb = roundtrip_sup(cubic, mb, Vb, tb);
  if (supb >= 1e-5 * (1.0 + detail_op::sup_norm(cubic, mb))) pass = false;
  char buf[64];
  std::snprintf(buf, sizeof buf, " bulk:x^3-2x %.1e", supb);
  detail += buf;
  report(4, pass, detail);
}

// --- criterion 5: variance cross-check ---------------------------------------------

void criterion_5() {
  bool pass = true;
  double worst_rel = 0.0;
  std::string worst_at = "-";
  struct Case {
    const char* measure;
    TestFunction xi;
    const char* label;
  };
  std::vector<Case> cases;
  cases.push_back({"gaussian", poly({0, 1}), "g:x"});
  cases.push_back({"gaussian", poly({0, 0, 1}), "g:x^2"});
  cases.push_back({"gaussian", poly({0, 0, 0, 1}), "g:x^3"});
  cases.push_back({"gaussian", poly({0, 0, -2, 0, 1}), "g:x^4-2x^2"});
  cases.push_back({"bulk_critical_quartic", poly({0, -2, 0, 1}), "b:x^3-2x"});
  cases.push_back({"edge_critical_quartic", poly({0, 2, -4, 1}), "e:cubic"});
  cases.push_back({"two_cut_quartic(1.5)", poly({0, 0, 1}), "2cut:x^2"});
  for (const auto& cs : cases) {
    EquilibriumMeasure m = catalog_measure(cs.measure);
    Potential V = catalog(cs.measure);
    TransportMap t = invert_master_operator(cs.xi, m, V);
    for (double beta : {1.0, 2.0, 4.0}) {
      try {
        CLTPrediction p = predict_clt(cs.xi, t, m, V, beta);
        double rel = std::abs(p.v_xi - p.v_xi_alt) / (1.0 + std::abs(p.v_xi));
        if (rel > worst_rel) {
          worst_rel = rel;
          worst_at = cs.label;
        }
      } catch (const Error&) {
        pass = false;
        worst_at = std::string(cs.label) + " (identity violation)";
      }
    }
  }
  if (worst_rel >= 1e-5) pass = false;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "|v - v_alt|/(1+v) worst %.2e at %s over 7 cases x 3 betas",
                worst_rel, worst_at.c_str());
  report(5, pass, buf);
}

// --- criterion 6: exact-law anchor ---------------------------------------------------

void criterion_6() {
  EquilibriumMeasure m = catalog_measure("gaussian");
  Potential V = catalog("gaussian");
  TestFunction xi = poly({0, 1});
  TransportMap t = invert_master_operator(xi, m, V);
  bool pass = true;
  std::string detail = "Fluct(x) ~ N(0, 2/beta):";
  for (double beta : {1.0, 2.0, 4.0}) {
    CLTPrediction pred = predict_clt(xi, t, m, V, beta);
    if (std::abs(pred.m_xi) > 1e-6) pass = false;
    if (std::abs(pred.v_xi - 2.0 / beta) > 1e-6) pass = false;
    int good = 0;
    for (int trial = 0; trial < 5; ++trial) {
      Rng rng(derive_seed(60001, static_cast<std::uint64_t>(100 * beta) + trial));
      std::vector<double> vals;
      vals.reserve(10000);
      for (int i = 0; i < 10000; ++i) {
        Configuration c = tridiagonal_sample(beta, 64, rng);
        double s = 0.0;
        for (double x : c.positions) s += x;
        vals.push_back(s);
      }
      auto ks = stats::ks_test_normal(vals, 0.0, 2.0 / beta);
      if (ks.p_value > 0.01) ++good;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, " beta=%g %d/5", beta, good);
    detail += buf;
    if (good < 4) pass = false;
  }
  report(6, pass, detail);
}

// --- criterion 7: second-moment anchor ------------------------------------------------

void criterion_7() {
  auto t0 = std::chrono::steady_clock::now();
  EquilibriumMeasure m = catalog_measure("gaussian");
  Potential V = catalog("gaussian");
  TestFunction xi = poly({0, 0, 1});
  TransportMap t = invert_master_operator(xi, m, V);
  CLTPrediction pred = predict_clt(xi, t, m, V, 2.0);

  Rng rng(derive_seed(70001, 0));
  std::vector<Configuration> draws;
  draws.reserve(10000);
  for (int i = 0; i < 10000; ++i) draws.push_back(tridiagonal_sample(2.0, 256, rng));
  FluctuationSample fs = collect_fluctuations(xi, draws, m, 10000, "tridiagonal");
  CLTVerdict v = empirical_clt(fs, pred);
  bool tri_ok = std::abs(v.mean - 0.0) < 3.0 * v.mean_stderr &&
                std::abs(v.variance - 2.0) < 0.10 * 2.0;

  McmcOptions opt;
  opt.sweeps = 150000;
  opt.burn_in = 4000;
  opt.thinning = 20;
  opt.seed = 70002;
  McmcResult mc = mcmc_sample(V, 2.0, 256, opt, &m);
  FluctuationSample mcfs = collect_fluctuations(
      xi, mc.samples, m, mc.diagnostics.effective_samples, "mcmc");
  CLTVerdict mv = empirical_clt(mcfs, pred);
  bool mc_ok = mc.diagnostics.effective_samples >= 1000 &&
               std::abs(mv.variance - 2.0) < 0.15 * 2.0 &&
               std::abs(mv.mean) < 3.0 * mv.mean_stderr;
  auto t1 = std::chrono::steady_clock::now();
  double secs = std::chrono::duration<double>(t1 - t0).count();
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "tridiag mean %.4f+-%.4f var %.4f | mcmc var %.4f (eff %.0f) "
                "| %.0fs",
                v.mean, v.mean_stderr, v.variance, mv.variance,
                mc.diagnostics.effective_samples, secs);
  report(7, tri_ok && mc_ok && secs < 600.0, buf);
}

// --- criterion 8: critical-case CLT ---------------------------------------------------

void criterion_8() {
  EquilibriumMeasure m = catalog_measure("bulk_critical_quartic");
  Potential V = catalog("bulk_critical_quartic");
  TestFunction xi = poly({0, -2, 0, 1});
  ConditionsReport rep = check_conditions(xi, m);
  bool x2_ok = true;
  for (const auto& v : rep.x2)
    for (double r : v)
      if (std::abs(r) >= 1e-8) x2_ok = false;
  TransportMap t = invert_master_operator(xi, m, V);
  CLTPrediction pred = predict_clt(xi, t, m, V, 2.0);

  const int kTrials = 5;
  std::vector<double> variances(kTrials);
  std::vector<double> ks_p(kTrials);
  std::vector<std::thread> pool;
  for (int trial = 0; trial < kTrials; ++trial) {
    pool.emplace_back([&, trial] {
      McmcOptions opt;
      opt.sweeps = 70000;
      opt.burn_in = 5000;
      opt.thinning = 20;
      opt.seed = 80000 + trial;
      McmcResult mc = mcmc_sample(V, 2.0, 128, opt, &m);
      FluctuationSample fs = collect_fluctuations(
          xi, mc.samples, m, mc.diagnostics.effective_samples, "mcmc");
      CLTVerdict v = empirical_clt(fs, pred);
      variances[trial] = v.variance;
      ks_p[trial] = v.ks_p;
    });
  }
  for (auto& th : pool) th.join();
  int ks_good = 0;
  double pooled_var = 0.0;
  for (int i = 0; i < kTrials; ++i) {
    pooled_var += variances[i] / kTrials;
    if (ks_p[i] > 0.01) ++ks_good;
  }
  bool var_ok = std::abs(pooled_var - pred.v_xi) < 0.15 * pred.v_xi;
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "(X2)<1e-8: %s  v_pred %.4f  pooled var %.4f  ks>0.01 in %d/5",
                x2_ok ? "yes" : "NO", pred.v_xi, pooled_var, ks_good);
  report(8, x2_ok && var_ok && ks_good >= 3, buf);
}

// --- criterion 9: condition checker ----------------------------------------------------

void criterion_9() {
  EquilibriumMeasure mb = catalog_measure("bulk_critical_quartic");
  ConditionsReport rb = check_conditions(poly({0, 1}), mb);
  bool pi_ok = !rb.x2.empty() && !rb.x2[0].empty() &&
               std::abs(rb.x2[0][0] - M_PI) < 1e-6 && !rb.satisfied;

  EquilibriumMeasure m2 = catalog_measure("two_cut_quartic(1.5)");
  bool odd_ok = true;
  for (auto xi : {poly({0, 1}), poly({0, 0, 0, 1})}) {
    ConditionsReport r2 = check_conditions(xi, m2);
    if (r2.x1.empty() || std::abs(r2.x1[0]) >= 1e-10 || !r2.satisfied)
      odd_ok = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "bulk xi=x: X2[d=1]=%.9f (pi to 1e-6), two-cut odd X1 ~ 0: %s",
                rb.x2[0][0], odd_ok ? "yes" : "NO");
  report(9, pi_ok && odd_ok, buf);
}

// --- criterion 10: rate probe ------------------------------------------------------------

void criterion_10() {
  EquilibriumMeasure m = catalog_measure("gaussian");
  Potential V = catalog("gaussian");
  TestFunction xi = poly({0, 0, 1});
  TransportMap t = invert_master_operator(xi, m, V);
  int decreased = 0;
  std::string detail = "gap(s=1) N=64 -> 128:";
  for (int trial = 0; trial < 5; ++trial) {
    double gap[2], err[2];
    int idx = 0;
    for (int N : {64, 128}) {
      Rng rng(derive_seed(100100, trial * 31 + N));
      std::vector<Configuration> cs;
      cs.reserve(100000);
      for (int i = 0; i < 100000; ++i)
        cs.push_back(tridiagonal_sample(2.0, N, rng));
      FluctuationSample fs = collect_fluctuations(xi, cs, m, 100000, "tridiagonal");
      auto rows = log_laplace_gap(fs, xi, t, m, {1.0});
      gap[idx] = std::abs(rows[0].gap);
      err[idx] = rows[0].stderr_jack;
      ++idx;
    }
    bool dec = gap[1] < 0.8 * gap[0] + err[0] + err[1];
    if (dec) ++decreased;
    char buf[80];
    std::snprintf(buf, sizeof buf, " %.4f->%.4f%s", gap[0], gap[1], dec ? "" : "(x)");
    detail += buf;
  }
  report(10, decreased >= 3,
         detail + "  decreased in " + std::to_string(decreased) + "/5");
}

// --- criterion 11: determinism across workers ---------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void criterion_11() {
  fs::path dir = fs::temp_directory_path() / "loggas_acceptance";
  fs::create_directories(dir);
  ExperimentConfig cfg;
  cfg.potential_name = "gaussian";
  cfg.xi_coeffs = {0, 0, 1};
  cfg.sampler = "mcmc";
  cfg.sweeps = 3000;
  cfg.burn_in = 500;
  cfg.thinning = 10;
  cfg.chains = 4;
  cfg.n_list = {8, 16};
  cfg.beta_list = {1.0, 2.0};
  cfg.seed = 424242;
  cfg.out_dir = (dir / "out").string();
  fs::path cfile = dir / "acc.cfg";
  {
    std::ofstream f(cfile);
    f << serialize_config(cfg);
  }
  std::map<std::string, std::string> snapshot;
  bool pass = true;
  for (int workers : {1, 2, 8}) {
    std::string cmd = std::string(LOGGAS_CLI_PATH) + " --config " +
                      cfile.string() + " --workers " + std::to_string(workers) +
                      " sample > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      pass = false;
      break;
    }
    for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
      std::string body = slurp(entry.path());
      std::string key = entry.path().filename().string();
      auto it = snapshot.find(key);
      if (it == snapshot.end())
        snapshot[key] = body;
      else if (it->second != body)
        pass = false;
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof buf,
                "%zu artifacts bit-identical across workers in {1, 2, 8}",
                snapshot.size());
  report(11, pass && !snapshot.empty(), buf);
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion_1_and_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  auto t1 = std::chrono::steady_clock::now();
  std::printf("acceptance: %d failure(s), %.0f s total\n", g_failures,
              std::chrono::duration<double>(t1 - t0).count());
  return g_failures == 0 ? 0 : 1;
}
