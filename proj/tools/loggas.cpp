// loggas: numerical laboratory for one-dimensional log-gases.
// Subcommands: equilibrium, invert, predict, sample, clt, verify.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "loggas/clt.hpp"
#include "loggas/config.hpp"
#include "loggas/io.hpp"
#include "loggas/master_op.hpp"
#include "loggas/measure.hpp"
#include "loggas/potential.hpp"
#include "loggas/sampler.hpp"
#include "loggas/solver.hpp"
#include "loggas/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace loggas;

namespace {

struct Ctx {
  ExperimentConfig cfg;
  io::FileStamp stamp;
  fs::path out;
};

std::string sanitize(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  std::string s = buf;
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

Potential make_potential(const ExperimentConfig& cfg) {
  if (!cfg.potential_file.empty()) return io::load_potential_file(cfg.potential_file);
  if (!cfg.potential_name.empty()) return catalog(cfg.potential_name);
  throw Error(ErrorCode::config_invalid, "config must set potential name or file");
}

TestFunction make_xi(const ExperimentConfig& cfg) {
  if (!cfg.xi_coeffs.empty())
    return TestFunction::from_polynomial(Polynomial(cfg.xi_coeffs));
  if (!cfg.xi_file.empty()) {
    Potential fit = io::load_potential_file(cfg.xi_file);
    auto ev = [fit](double x, int k) { return fit(x, k); };
    return TestFunction(cfg.xi_file, ev, fit.regularity_order(), fit.domain_hint());
  }
  throw Error(ErrorCode::config_invalid, "config must set xi coeffs or file");
}

EquilibriumMeasure make_measure(const Ctx& ctx, const Potential& V,
                                SolveDiagnostics* diag = nullptr) {
  const auto& cfg = ctx.cfg;
  if (cfg.measure_source == "file") {
    if (cfg.measure_file.empty())
      throw Error(ErrorCode::config_invalid, "measure_source=file needs measure_file");
    return io::load_measure(cfg.measure_file);
  }
  if (cfg.measure_source == "catalog") {
    if (!cfg.potential_name.empty())
      return catalog_measure(cfg.potential_name, cfg.cheb_nodes);
    // no closed form available: fall through to the solver
  } else if (cfg.measure_source != "solve") {
    throw Error(ErrorCode::config_invalid,
                "measure_source must be catalog, solve, or file");
  }
  SolveOptions opt;
  opt.window = {cfg.window_lo, cfg.window_hi};
  opt.nodes = cfg.grid_nodes;
  opt.cheb_nodes = cfg.cheb_nodes;
  return solve_equilibrium(V, opt, diag);
}

void write_json(const fs::path& path, json j, const Ctx& ctx) {
  j["tool_version"] = kToolVersion;
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(ctx.stamp.config_hash));
  j["config_hash"] = buf;
  std::ofstream f(path);
  io::require(f.good(), "cannot open '" + path.string() + "' for writing");
  f << j.dump(2) << "\n";
}

json conditions_json(const ConditionsReport& rep) {
  json j;
  j["x1_residuals"] = rep.x1;
  j["x2_residuals"] = rep.x2;
  j["satisfied"] = rep.satisfied;
  j["tolerance"] = rep.tolerance;
  return j;
}

// run n_cells jobs on a pool; results land in caller-indexed slots so the
// artifacts do not depend on the worker count
void run_cells(int n_cells, int workers, const std::function<void(int)>& job) {
  workers = std::max(1, std::min(workers, n_cells));
  if (workers == 1) {
    for (int i = 0; i < n_cells; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mx;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n_cells) return;
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mx);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// --- subcommands ------------------------------------------------------------

int cmd_equilibrium(Ctx& ctx) {
  Potential V = make_potential(ctx.cfg);
  SolveOptions opt;
  opt.window = {ctx.cfg.window_lo, ctx.cfg.window_hi};
  opt.nodes = ctx.cfg.grid_nodes;
  opt.cheb_nodes = ctx.cfg.cheb_nodes;
  SolveDiagnostics diag;
  EquilibriumMeasure m = solve_equilibrium(V, opt, &diag);
  io::save_measure((ctx.out / ("measure_" + V.name() + ".txt")).string(), m,
                   ctx.stamp);
  json j;
  j["potential"] = V.name();
  j["c_V"] = m.c_V();
  j["I_V"] = m.energy_value();
  j["mass"] = m.mass();
  j["stationarity"] = diag.stationarity;
  j["max_abs_zeta_on_support"] = diag.certificate.max_abs_on_support;
  j["min_zeta_off_support"] = diag.certificate.min_off_support;
  j["dyson_residual"] = diag.certificate.dyson_residual;
  json sup = json::array();
  for (const auto& iv : m.support()) sup.push_back({iv.lo, iv.hi});
  j["support"] = sup;
  json sing = json::array();
  for (const auto& sp : m.singular_points())
    sing.push_back({{"position", sp.position}, {"order", sp.order}});
  j["singular_points"] = sing;
  write_json(ctx.out / "equilibrium.json", j, ctx);
  std::printf("equilibrium: support certified, max|zeta| = %.3e, c_V = %.12g\n",
              diag.certificate.max_abs_on_support, m.c_V());
  return 0;
}

int cmd_invert(Ctx& ctx) {
  Potential V = make_potential(ctx.cfg);
  EquilibriumMeasure m = make_measure(ctx, V);
  TestFunction xi = make_xi(ctx.cfg);
  ConditionsReport rep = check_conditions(xi, m);
  write_json(ctx.out / "conditions.json", conditions_json(rep), ctx);
  TransportMap t = invert_master_operator(xi, m, V);  // throws if inadmissible
  io::save_psi((ctx.out / "psi.txt").string(), t, ctx.stamp);
  json j = conditions_json(rep);
  j["c_xi"] = t.c_xi();
  j["c_xi_spread"] = t.c_xi_spread();
  j["t_max"] = t.t_max();
  j["U"] = {t.U().lo, t.U().hi};
  write_json(ctx.out / "invert.json", j, ctx);
  std::printf("invert: c_xi = %.12g, t_max = %.4g\n", t.c_xi(), t.t_max());
  return 0;
}

int cmd_predict(Ctx& ctx) {
  Potential V = make_potential(ctx.cfg);
  EquilibriumMeasure m = make_measure(ctx, V);
  TestFunction xi = make_xi(ctx.cfg);
  TransportMap t = invert_master_operator(xi, m, V);
  json preds = json::array();
  for (double beta : ctx.cfg.beta_list) {
    CLTPrediction p = predict_clt(xi, t, m, V, beta);
    json j;
    j["beta"] = beta;
    j["m_xi"] = p.m_xi;
    j["v_xi"] = p.v_xi;
    j["v_xi_alt"] = p.v_xi_alt;
    j["x1_residuals"] = p.conditions.x1;
    j["x2_residuals"] = p.conditions.x2;
    preds.push_back(j);
    std::printf("predict: beta = %g  m_xi = %.12g  v_xi = %.12g\n", beta, p.m_xi,
                p.v_xi);
  }
  json j;
  j["xi"] = xi.name();
  j["potential"] = V.name();
  j["predictions"] = preds;
  write_json(ctx.out / "predictions.json", j, ctx);
  return 0;
}

struct Cell {
  int N = 0;
  double beta = 0.0;
  int chain = 0;
  int index = 0;
};

std::vector<Cell> make_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  int idx = 0;
  int chains = (cfg.sampler == "tridiagonal") ? 1 : cfg.chains;
  for (int N : cfg.n_list)
    for (double beta : cfg.beta_list)
      for (int c = 0; c < chains; ++c) cells.push_back({N, beta, c, idx++});
  return cells;
}

struct CellResult {
  std::vector<Configuration> samples;
  ChainDiagnostics diag;
  bool has_diag = false;
};

CellResult run_cell(const Ctx& ctx, const Cell& cell, const Potential& V,
                    const EquilibriumMeasure& m) {
  CellResult res;
  if (ctx.cfg.sampler == "tridiagonal") {
    Rng rng(derive_seed(ctx.cfg.seed, static_cast<std::uint64_t>(cell.index)));
    res.samples.reserve(ctx.cfg.draws);
    for (long i = 0; i < ctx.cfg.draws; ++i) {
      Configuration c = tridiagonal_sample(cell.beta, cell.N, rng);
      c.seed = ctx.cfg.seed;
      c.chain = cell.chain;
      c.sweep = i;
      res.samples.push_back(std::move(c));
    }
    return res;
  }
  McmcOptions opt;
  opt.sweeps = ctx.cfg.sweeps;
  opt.burn_in = ctx.cfg.burn_in;
  opt.thinning = ctx.cfg.thinning;
  opt.window = {ctx.cfg.window_lo, ctx.cfg.window_hi};
  opt.seed = ctx.cfg.seed;
  opt.chain_id = cell.index;
  McmcResult r = mcmc_sample(V, cell.beta, cell.N, opt, &m);
  res.samples = std::move(r.samples);
  res.diag = r.diagnostics;
  res.has_diag = true;
  return res;
}

json diag_json(const Cell& cell, const CellResult& res) {
  json j;
  j["N"] = cell.N;
  j["beta"] = cell.beta;
  j["chain"] = cell.chain;
  j["samples"] = res.samples.size();
  if (res.has_diag) {
    j["acceptance_rate"] = res.diag.acceptance_rate;
    j["autocorrelation_time"] = res.diag.autocorrelation_time;
    j["effective_samples"] = res.diag.effective_samples;
    j["outside_fraction"] = res.diag.outside_fraction;
    j["proposal_scale"] = res.diag.proposal_scale;
    j["adapted"] = res.diag.adapted;
  } else {
    j["effective_samples"] = res.samples.size();  // independent draws
  }
  return j;
}

int cmd_sample(Ctx& ctx) {
  Potential V = make_potential(ctx.cfg);
  EquilibriumMeasure m = make_measure(ctx, V);
  std::vector<Cell> cells = make_cells(ctx.cfg);
  std::vector<CellResult> results(cells.size());
  run_cells(static_cast<int>(cells.size()), ctx.cfg.workers,
            [&](int i) { results[i] = run_cell(ctx, cells[i], V, m); });
  json diags = json::array();
  for (size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    std::string base = "samples_N" + std::to_string(c.N) + "_beta" +
                       sanitize(c.beta) + "_chain" + std::to_string(c.chain);
    if (ctx.cfg.sample_format == "binary")
      io::save_samples_binary((ctx.out / (base + ".lgs")).string(),
                              results[i].samples, ctx.stamp);
    else
      io::save_samples_csv((ctx.out / (base + ".csv")).string(),
                           results[i].samples, ctx.stamp);
    diags.push_back(diag_json(c, results[i]));
  }
  json j;
  j["cells"] = diags;
  write_json(ctx.out / "diagnostics.json", j, ctx);
  std::printf("sample: wrote %zu cells\n", cells.size());
  return 0;
}

int cmd_clt(Ctx& ctx) {
  Potential V = make_potential(ctx.cfg);
  EquilibriumMeasure m = make_measure(ctx, V);
  TestFunction xi = make_xi(ctx.cfg);
  TransportMap t = invert_master_operator(xi, m, V);

  std::vector<Cell> cells = make_cells(ctx.cfg);
  std::vector<CellResult> results(cells.size());
  run_cells(static_cast<int>(cells.size()), ctx.cfg.workers,
            [&](int i) { results[i] = run_cell(ctx, cells[i], V, m); });

  std::vector<io::VerdictRow> rows;
  json summary = json::array();
  for (int N : ctx.cfg.n_list) {
    for (double beta : ctx.cfg.beta_list) {
      CLTPrediction pred = predict_clt(xi, t, m, V, beta);
      std::vector<Configuration> pooled;
      double eff = 0.0;
      for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].N != N || cells[i].beta != beta) continue;
        for (const auto& s : results[i].samples) pooled.push_back(s);
        eff += results[i].has_diag
                   ? results[i].diag.effective_samples
                   : static_cast<double>(results[i].samples.size());
      }
      FluctuationSample fs =
          collect_fluctuations(xi, pooled, m, eff, ctx.cfg.sampler);
      CLTVerdict v = empirical_clt(fs, pred);
      io::VerdictRow row;
      row.potential = V.name();
      row.xi = xi.name();
      row.N = N;
      row.beta = beta;
      row.m_pred = pred.m_xi;
      row.m_emp = v.mean;
      row.m_err = v.mean_stderr;
      row.v_pred = pred.v_xi;
      row.v_emp = v.variance;
      row.v_err = v.variance_stderr;
      row.ks_p = v.ks_p;
      rows.push_back(row);
      std::string hist_name = "hist_N" + std::to_string(N) + "_beta" +
                              sanitize(beta) + ".csv";
      io::save_histogram((ctx.out / hist_name).string(),
                         stats::histogram(fs.values, pred.m_xi, pred.v_xi, 40),
                         ctx.stamp);
      json cellj;
      cellj["N"] = N;
      cellj["beta"] = beta;
      cellj["m_pred"] = pred.m_xi;
      cellj["v_pred"] = pred.v_xi;
      cellj["mean"] = v.mean;
      cellj["mean_stderr"] = v.mean_stderr;
      cellj["variance"] = v.variance;
      cellj["variance_stderr"] = v.variance_stderr;
      cellj["ks_p"] = v.ks_p;
      cellj["conclusive"] = v.conclusive;
      cellj["effective_samples"] = fs.effective_samples;
      std::vector<double> grid = ctx.cfg.s_grid;
      if (grid.empty()) grid = default_s_grid(beta, N, t.t_max());
      json laplace = json::array();
      for (const auto& lr : log_laplace_gap(fs, xi, t, m, grid)) {
        laplace.push_back({{"s", lr.s},
                           {"gap", lr.gap},
                           {"stderr", lr.stderr_jack},
                           {"unstable", lr.unstable}});
      }
      cellj["log_laplace"] = laplace;
      summary.push_back(cellj);
      std::printf(
          "clt: N=%d beta=%g  mean %.4f+-%.4f (pred %.4f)  var %.4f+-%.4f "
          "(pred %.4f)  ks_p %.3f\n",
          N, beta, v.mean, v.mean_stderr, pred.m_xi, v.variance,
          v.variance_stderr, pred.v_xi, v.ks_p);
    }
  }
  io::save_verdicts((ctx.out / "verdicts.csv").string(), rows, ctx.stamp);
  json j;
  j["potential"] = V.name();
  j["xi"] = xi.name();
  j["cells"] = summary;
  write_json(ctx.out / "clt_summary.json", j, ctx);
  return 0;
}

int cmd_verify(Ctx& ctx) {
  Potential V = make_potential(ctx.cfg);
  SolveDiagnostics diag;
  EquilibriumMeasure m = make_measure(ctx, V, &diag);
  double scale = ctx.cfg.tolerance_scale;
  bool exact_density = (ctx.cfg.measure_source == "catalog" &&
                        !ctx.cfg.potential_name.empty());
  int failures = 0;
  json checks = json::array();
  auto report = [&](const std::string& name, double value, double threshold,
                    bool pass) {
    std::printf("[%s] %-28s value = %.3e  threshold = %.3e\n",
                pass ? "PASS" : "FAIL", name.c_str(), value, threshold);
    if (!pass) ++failures;
    checks.push_back({{"name", name},
                      {"value", value},
                      {"threshold", threshold},
                      {"pass", pass}});
  };

  double mass_gap = std::abs(m.mass() - 1.0);
  report("mass", mass_gap, 1e-8 * scale, mass_gap < 1e-8 * scale);

  ZetaReport zr = verify_euler_lagrange(m, V);
  double zeta_thr = 1e-4 * (1.0 + std::abs(m.c_V())) * scale;
  report("euler_lagrange_on_support", zr.max_abs_on_support, zeta_thr,
         zr.max_abs_on_support < zeta_thr);
  report("euler_lagrange_off_support", zr.min_off_support, 0.0,
         zr.min_off_support > 0.0);

  double dyson_thr = (exact_density ? 1e-6 : 1e-3) * scale;
  report("dyson_residual", zr.dyson_residual, dyson_thr,
         zr.dyson_residual < dyson_thr);

  double quad = quadratic_identity_residual(m, V);
  double quad_thr = (exact_density ? 1e-5 : 1e-3) * scale;
  report("quadratic_identity", quad, quad_thr, quad < quad_thr);

  {
    Rng rng(derive_seed(ctx.cfg.seed, 987));
    double lo = m.support().front().lo - 0.2;
    double hi = m.support().back().hi + 0.2;
    double worst_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      int N = (trial % 2) ? 8 : 64;
      Configuration c;
      for (int i = 0; i < N; ++i) c.positions.push_back(rng.uniform(lo, hi));
      std::sort(c.positions.begin(), c.positions.end());
      worst_rel = std::max(worst_rel, splitting_gap(c, V, m) / (N * N));
    }
    report("splitting_identity", worst_rel, 1e-5 * scale,
           worst_rel < 1e-5 * scale);
  }

  std::vector<TestFunction> xis;
  if (!ctx.cfg.xi_coeffs.empty() || !ctx.cfg.xi_file.empty())
    xis.push_back(make_xi(ctx.cfg));
  else {
    xis.push_back(TestFunction::from_polynomial(Polynomial({0, 1})));
    xis.push_back(TestFunction::from_polynomial(Polynomial({0, 0, 1})));
  }
  for (const auto& xi : xis) {
    ConditionsReport rep = check_conditions(xi, m);
    bool invertible = rep.satisfied;
    for (double r : rep.x1_signed)
      if (std::abs(r) > rep.tolerance) invertible = false;
    if (!invertible) continue;
    TransportMap t = invert_master_operator(xi, m, V);
    double norm = detail_op::sup_norm(xi, m);
    report("roundtrip(" + xi.name() + ")", t.c_xi_spread(),
           1e-5 * (1.0 + norm) * scale,
           t.c_xi_spread() < 1e-5 * (1.0 + norm) * scale);
    double vgap = variance_identity_gap(t, xi, m, V);
    report("variance_identity(" + xi.name() + ")", vgap,
           1e-5 * scale * (1 + norm), vgap < 1e-5 * scale * (1 + norm));
    for (double beta : ctx.cfg.beta_list) {
      try {
        CLTPrediction p = predict_clt(xi, t, m, V, beta);
        double gap = std::abs(p.v_xi - p.v_xi_alt);
        report("variance_forms(" + xi.name() + ",beta=" + sanitize(beta) + ")",
               gap, 1e-5 * (1.0 + p.v_xi) * scale,
               gap < 1e-5 * (1.0 + p.v_xi) * scale);
      } catch (const Error&) {
        report("variance_forms(" + xi.name() + ")", INFINITY, 0.0, false);
      }
    }
  }
  json j;
  j["potential"] = V.name();
  j["checks"] = checks;
  j["failures"] = failures;
  write_json(ctx.out / "verify.json", j, ctx);
  std::printf("verify: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"loggas: log-gas equilibrium measures, master-operator "
               "inversion, Gibbs sampling, and CLT verification"};
  app.set_version_flag("--version", kToolVersion);
  std::string config_path;
  bool print_schema = false;
  std::uint64_t seed_override = 0;
  int workers_override = 0;
  std::string out_override;
  double tol_override = 0.0;
  app.add_option("--config", config_path, "experiment configuration file");
  app.add_flag("--print-schema", print_schema, "print the config schema and exit");
  auto* seed_opt = app.add_option("--seed", seed_override, "override the master seed");
  auto* workers_opt =
      app.add_option("--workers", workers_override, "override the worker count");
  app.add_option("--out", out_override, "override the output directory");
  auto* tol_opt = app.add_option("--tolerance-scale", tol_override,
                                 "scale every certification threshold");

  auto* c_eq = app.add_subcommand("equilibrium",
                                  "solve and certify the equilibrium measure");
  auto* c_inv = app.add_subcommand("invert", "invert the master operator for xi");
  auto* c_pred = app.add_subcommand("predict", "emit the CLT parameters");
  auto* c_samp = app.add_subcommand("sample", "draw Gibbs samples");
  auto* c_clt =
      app.add_subcommand("clt", "compare fluctuations with the prediction");
  auto* c_ver = app.add_subcommand("verify", "run the identity suite");
  app.require_subcommand(0, 1);

  CLI11_PARSE(app, argc, argv);

  if (print_schema) {
    std::fputs(config_schema().c_str(), stdout);
    return 0;
  }

  try {
    Ctx ctx;
    if (config_path.empty())
      throw Error(ErrorCode::config_invalid, "--config is required");
    std::ifstream f(config_path);
    if (!f.good())
      throw Error(ErrorCode::io_error, "cannot read config '" + config_path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    ctx.cfg = parse_config(buf.str());
    if (seed_opt->count()) ctx.cfg.seed = seed_override;
    if (workers_opt->count()) {
      ctx.cfg.workers = workers_override;
    } else if (const char* env = std::getenv("LOGGAS_WORKERS")) {
      ctx.cfg.workers = std::atoi(env);
    }
    if (!out_override.empty()) ctx.cfg.out_dir = out_override;
    if (tol_opt->count()) ctx.cfg.tolerance_scale = tol_override;
    ctx.stamp.config_hash = config_hash(ctx.cfg);
    ctx.out = ctx.cfg.out_dir;
    fs::create_directories(ctx.out);

    if (c_eq->parsed()) return cmd_equilibrium(ctx);
    if (c_inv->parsed()) return cmd_invert(ctx);
    if (c_pred->parsed()) return cmd_predict(ctx);
    if (c_samp->parsed()) return cmd_sample(ctx);
    if (c_clt->parsed()) return cmd_clt(ctx);
    if (c_ver->parsed()) return cmd_verify(ctx);
    std::fputs(app.help().c_str(), stdout);
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error[%s]: %s\n", error_code_name(e.code()), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 99;
  }
}
