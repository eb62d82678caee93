#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "loggas/error.hpp"
#include "loggas/master_op.hpp"
#include "loggas/measure.hpp"
#include "loggas/potential.hpp"
#include "loggas/rng.hpp"
#include "loggas/stats.hpp"

namespace loggas {

struct Configuration {
  std::vector<double> positions;  // sorted ascending
  double beta = 2.0;
  std::uint64_t seed = 0;
  int chain = 0;
  long sweep = 0;

  int N() const { return static_cast<int>(positions.size()); }
};

// H_N = sum_{i != j} -log|x_i - x_j| + N sum V(x_i)
inline double energy(const Potential& V, const Configuration& c) {
  int N = c.N();
  double pair = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double d = std::abs(c.positions[i] - c.positions[j]);
      if (d == 0.0) return std::numeric_limits<double>::infinity();
      pair -= 2.0 * std::log(d);
    }
  double field = 0.0;
  for (double x : c.positions) field += V(x, 0);
  return pair + N * field;
}

// energy change when particle i moves to xnew; O(N)
inline double energy_delta(const Potential& V, const std::vector<double>& xs,
                           int i, double xnew) {
  int N = static_cast<int>(xs.size());
  double acc = N * (V(xnew, 0) - V(xs[i], 0));
  for (int j = 0; j < N; ++j) {
    if (j == i) continue;
    double dnew = std::abs(xnew - xs[j]);
    if (dnew == 0.0) return std::numeric_limits<double>::infinity();
    acc += 2.0 * (std::log(std::abs(xs[i] - xs[j])) - std::log(dnew));
  }
  return acc;
}

// F_N(X, mu) = sum_{i != j} -log|x_i-x_j| - 2N sum h^mu(x_i) + N^2 iint -log dmu dmu
inline double next_order_energy(const Configuration& c,
                                const EquilibriumMeasure& m) {
  int N = c.N();
  double pair = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double d = std::abs(c.positions[i] - c.positions[j]);
      if (d == 0.0) return std::numeric_limits<double>::infinity();
      pair -= 2.0 * std::log(d);
    }
  double hsum = 0.0;
  for (double x : c.positions) hsum += m.log_potential(x);
  return pair - 2.0 * N * hsum + static_cast<double>(N) * N * m.log_energy();
}

// The splitting identity is exact; the value measures quadrature error only.
inline double splitting_gap(const Configuration& c, const Potential& V,
                            const EquilibriumMeasure& m) {
  int N = c.N();
  double zsum = 0.0;
  for (double x : c.positions) zsum += zeta(m, V, x);
  double lhs = energy(V, c);
  double rhs = static_cast<double>(N) * N * m.energy_value() + 2.0 * N * zsum +
               next_order_energy(c, m);
  return std::abs(lhs - rhs);
}

// A[X, psi] = iint (psi(x)-psi(y))/(x-y) dfluct dfluct with psi' on the diagonal
inline double anisotropy(const Configuration& c, const TransportMap& t,
                         const EquilibriumMeasure& m) {
  int N = c.N();
  double cutoff = 1e-7 * m.total_width();
  std::vector<double> pv(N), pd(N);
  for (int i = 0; i < N; ++i) {
    pv[i] = t.psi(c.positions[i]);
    pd[i] = t.dpsi(c.positions[i]);
  }
  // node-side caches
  std::vector<double> nx, nw, npsi, ndpsi;
  for (const auto& p : m.parts())
    for (int j = 0; j < p.grid.n; ++j) {
      nx.push_back(p.grid.x[j]);
      nw.push_back(p.mu_w[j]);
      npsi.push_back(t.psi(p.grid.x[j]));
      ndpsi.push_back(t.dpsi(p.grid.x[j]));
    }
  auto K = [&](double xa, double pa, double da, double xb, double pb) {
    double d = xa - xb;
    return (std::abs(d) < cutoff) ? da : (pa - pb) / d;
  };
  double part_pp = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      part_pp += K(c.positions[i], pv[i], pd[i], c.positions[j], pv[j]);
  double part_pm = 0.0;
  for (int i = 0; i < N; ++i) {
    double g = 0.0;
    for (size_t j = 0; j < nx.size(); ++j)
      g += nw[j] * K(c.positions[i], pv[i], pd[i], nx[j], npsi[j]);
    part_pm += g;
  }
  double part_mm = 0.0;
  for (size_t i = 0; i < nx.size(); ++i) {
    double g = 0.0;
    for (size_t j = 0; j < nx.size(); ++j)
      g += nw[j] * K(nx[i], npsi[i], ndpsi[i], nx[j], npsi[j]);
    part_mm += nw[i] * g;
  }
  return part_pp - 2.0 * N * part_pm + static_cast<double>(N) * N * part_mm;
}

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  double autocorrelation_time = 1.0;  // of sum x_i, in recorded samples
  double effective_samples = 0.0;
  double outside_fraction = 0.0;      // sweeps with any particle outside U
  double proposal_scale = 0.0;
  bool adapted = false;
};

struct McmcOptions {
  long sweeps = 20000;
  long burn_in = 2000;
  int thinning = 10;
  Interval window{-4.0, 4.0};
  std::uint64_t seed = 1;
  int chain_id = 0;
};

struct McmcResult {
  std::vector<Configuration> samples;
  ChainDiagnostics diagnostics;
};

// Metropolis with single-particle Gaussian proposals. The proposal scale is
// adapted toward acceptance in [0.3, 0.5] during burn-in and then frozen;
// output is deterministic for a fixed (seed, chain) pair.
inline McmcResult mcmc_sample(const Potential& V, double beta, int N,
                              const McmcOptions& opt,
                              const EquilibriumMeasure* guard = nullptr) {
  if (N < 2) throw Error(ErrorCode::domain, "need at least two particles");
  if (!(beta > 0)) throw Error(ErrorCode::domain, "beta must be positive");
  GrowthReport gr = check_growth(
      V, 12.0 * std::max(1.0, V.domain_hint().second - V.domain_hint().first) + 1.0);
  if (!gr.passes)
    throw Error(ErrorCode::domain, "potential fails the growth condition");
  std::vector<Interval> confine;
  if (guard) {
    if (guard->support().front().lo < opt.window.lo ||
        guard->support().back().hi > opt.window.hi)
      throw Error(ErrorCode::domain,
                  "window excludes part of the equilibrium support");
    confine = guard->dilated_support(0.2);
  }

  Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(opt.chain_id)));
  std::vector<double> xs(N);
  double lo = guard ? guard->support().front().lo : opt.window.lo * 0.5;
  double hi = guard ? guard->support().back().hi : opt.window.hi * 0.5;
  for (int i = 0; i < N; ++i)
    xs[i] = lo + (hi - lo) * (i + 0.5) / N;

  double scale = 0.5 * (hi - lo) / std::sqrt(static_cast<double>(N));
  long accepted = 0, proposed = 0;
  long acc_window = 0, prop_window = 0;
  McmcResult out;
  std::vector<double> sums;
  long outside = 0, measured = 0;

  for (long sweep = 0; sweep < opt.burn_in + opt.sweeps; ++sweep) {
    bool burning = sweep < opt.burn_in;
    for (int i = 0; i < N; ++i) {
      double xnew = xs[i] + scale * rng.normal();
      double delta = energy_delta(V, xs, i, xnew);
      ++proposed;
      ++prop_window;
      if (std::log(rng.uniform()) <= -0.5 * beta * delta) {
        xs[i] = xnew;
        ++accepted;
        ++acc_window;
      }
    }
    if (burning) {
      if (prop_window >= 50 * N) {
        double rate = static_cast<double>(acc_window) / prop_window;
        if (rate > 0.5)
          scale *= 1.12;
        else if (rate < 0.3)
          scale /= 1.12;
        acc_window = prop_window = 0;
      }
      if (sweep == opt.burn_in - 1) accepted = proposed = 0;
      continue;
    }
    double s = 0.0;
    for (double x : xs) s += x;
    sums.push_back(s);
    if (!confine.empty()) {
      ++measured;
      for (double x : xs) {
        bool inside = false;
        for (const auto& iv : confine)
          if (iv.contains(x)) inside = true;
        if (!inside) {
          ++outside;
          break;
        }
      }
    }
    long post = sweep - opt.burn_in;
    if (post % opt.thinning == 0) {
      Configuration c;
      c.positions = xs;
      std::sort(c.positions.begin(), c.positions.end());
      c.beta = beta;
      c.seed = opt.seed;
      c.chain = opt.chain_id;
      c.sweep = sweep;
      out.samples.push_back(std::move(c));
    }
  }
  ChainDiagnostics& d = out.diagnostics;
  d.proposal_scale = scale;
  d.acceptance_rate = proposed ? static_cast<double>(accepted) / proposed : 0.0;
  d.adapted = d.acceptance_rate >= 0.1 && d.acceptance_rate <= 0.9;
  if (sums.empty()) return out;
  double tau_sweeps = stats::integrated_autocorrelation(sums);
  d.autocorrelation_time = tau_sweeps / opt.thinning;
  d.effective_samples =
      std::min(static_cast<double>(sums.size()) / tau_sweeps,
               static_cast<double>(out.samples.size()));
  d.outside_fraction =
      measured ? static_cast<double>(outside) / measured : NAN;
  return out;
}

// Exact sampler for V(x) = x^2/2: eigenvalues of the symmetric tridiagonal
// matrix with standard-normal diagonal and chi(beta (N-k))/sqrt(2)
// off-diagonal entries, rescaled by 1/sqrt(beta N / 2). The joint density is
// prod |x_i - x_j|^beta exp(-(beta N / 4) sum x_i^2).
inline Configuration tridiagonal_sample(double beta, int N, Rng& rng) {
  if (!(beta > 0)) throw Error(ErrorCode::domain, "beta must be positive");
  Eigen::VectorXd diag(N), sub(N - 1);
  for (int i = 0; i < N; ++i) diag[i] = rng.normal();
  for (int k = 1; k < N; ++k)
    sub[k - 1] = rng.chi(beta * (N - k)) / std::sqrt(2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  double s = 1.0 / std::sqrt(0.5 * beta * N);
  Configuration c;
  c.positions.resize(N);
  for (int i = 0; i < N; ++i) c.positions[i] = es.eigenvalues()[i] * s;
  std::sort(c.positions.begin(), c.positions.end());
  c.beta = beta;
  return c;
}

// positions through phi_t = Id + t psi; monotone for |t| <= t_max
inline Configuration transport_configuration(const Configuration& c,
                                             const TransportMap& t, double tt) {
  if (std::abs(tt) > t.t_max())
    throw Error(ErrorCode::step_size, "|t| exceeds t_max = " +
                                          std::to_string(t.t_max()));
  Configuration out = c;
  for (double& x : out.positions) x += tt * t.psi(x);
  for (size_t i = 1; i < out.positions.size(); ++i)
    if (out.positions[i] < out.positions[i - 1])
      throw Error(ErrorCode::step_size, "transport failed to preserve order");
  return out;
}

// Push mu through phi_t; the density is (mu / phi_t') at phi_t^{-1}(x), the
// inverse resolved by monotone bisection. Returns the measure and the gap of
// the entropy identity int log phi_t' dmu = Ent(mu) - Ent(mu_t).
inline std::pair<EquilibriumMeasure, double> pushforward_measure(
    const EquilibriumMeasure& m, const TransportMap& t, double tt) {
  if (std::abs(tt) > t.t_max())
    throw Error(ErrorCode::step_size, "|t| exceeds t_max");
  auto phi = [&](double y) { return y + tt * t.psi(y); };
  auto dphi = [&](double y) { return 1.0 + tt * t.dpsi(y); };
  double lo0 = m.support().front().lo - m.total_width();
  double hi0 = m.support().back().hi + m.total_width();
  std::vector<Interval> ivs;
  for (const auto& iv : m.support()) ivs.push_back({phi(iv.lo), phi(iv.hi)});
  std::vector<SingularPoint> sing;
  for (const auto& sp : m.singular_points())
    sing.push_back({phi(sp.position), sp.order});
  // self-contained density closure: the measure object outlives this frame
  EquilibriumMeasure base = m;
  TransportMap map = t;
  auto dens = [base, map, tt, lo0, hi0](double x) {
    double lo = lo0, hi = hi0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      (mid + tt * map.psi(mid) < x ? lo : hi) = mid;
      if (hi - lo < 1e-15 * (hi0 - lo0)) break;
    }
    double y = 0.5 * (lo + hi);
    return base.density(y) / (1.0 + tt * map.dpsi(y));
  };
  EquilibriumMeasure pushed = EquilibriumMeasure::build(
      m.name() + "_pushforward", ivs, dens, sing, nullptr, 192, m.sigma_form());
  double lhs = m.integrate_mu([&](double y) { return std::log(dphi(y)); });
  double gap = std::abs(lhs - (m.entropy() - pushed.entropy()));
  return {pushed, gap};
}

}  // namespace loggas
