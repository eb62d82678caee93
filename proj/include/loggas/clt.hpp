#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "loggas/error.hpp"
#include "loggas/master_op.hpp"
#include "loggas/measure.hpp"
#include "loggas/sampler.hpp"
#include "loggas/stats.hpp"
#include "loggas/test_function.hpp"

namespace loggas {

// Fluct_N(xi) = sum xi(x_i) - N int xi dmu
inline double fluctuation(const TestFunction& xi, const Configuration& c,
                          const EquilibriumMeasure& m) {
  double s = 0.0;
  for (double x : c.positions) s += xi(x, 0);
  return s - c.N() * m.integrate_mu([&](double y) { return xi(y, 0); });
}

struct FluctuationSample {
  std::vector<double> values;
  int N = 0;
  double beta = 0.0;
  double effective_samples = 0.0;
  std::string provenance;
};

inline FluctuationSample collect_fluctuations(
    const TestFunction& xi, const std::vector<Configuration>& configs,
    const EquilibriumMeasure& m, double effective_samples,
    std::string provenance) {
  FluctuationSample out;
  out.values.reserve(configs.size());
  for (const auto& c : configs) out.values.push_back(fluctuation(xi, c, m));
  out.N = configs.empty() ? 0 : configs.front().N();
  out.beta = configs.empty() ? 0.0 : configs.front().beta;
  out.effective_samples =
      effective_samples > 0 ? effective_samples
                            : static_cast<double>(configs.size());
  out.provenance = std::move(provenance);
  return out;
}

struct LaplaceRow {
  double s = 0.0;
  double gap = 0.0;
  double stderr_jack = 0.0;
  bool unstable = false;
};

struct CLTVerdict {
  double mean = 0.0, mean_stderr = 0.0;
  double variance = 0.0, variance_stderr = 0.0;
  double ks_statistic = 0.0, ks_p = 0.0;
  bool conclusive = false;
  std::vector<LaplaceRow> laplace;
};

// Moment estimates with batch-means errors and a KS test against the
// predicted Gaussian. Error bars use the effective count, not the raw count.
inline CLTVerdict empirical_clt(const FluctuationSample& sample,
                                const CLTPrediction& pred) {
  CLTVerdict v;
  v.conclusive = sample.effective_samples > 100;
  if (sample.values.size() < 4) {
    v.conclusive = false;
    return v;
  }
  int B = std::max(2, static_cast<int>(std::sqrt(sample.effective_samples)));
  v.mean = stats::mean(sample.values);
  v.variance = stats::variance(sample.values);
  v.mean_stderr = stats::batch_means_stderr(sample.values, B);
  v.variance_stderr = stats::batch_variance_stderr(sample.values, B);
  auto ks = stats::ks_test_normal(sample.values, pred.m_xi, pred.v_xi,
                                  sample.effective_samples);
  v.ks_statistic = ks.statistic;
  v.ks_p = ks.p_value;
  return v;
}

// Empirical log-Laplace transform against the transport prediction
//   -(1 - beta/2)(2s/beta) int psi' dmu - (s^2/beta) int xi' psi dmu,
// with delete-one-batch jackknife error bars.
inline std::vector<LaplaceRow> log_laplace_gap(const FluctuationSample& sample,
                                               const TestFunction& xi,
                                               const TransportMap& t,
                                               const EquilibriumMeasure& m,
                                               const std::vector<double>& s_grid) {
  double beta = sample.beta;
  double int_dpsi = m.integrate_mu([&](double x) { return t.dpsi(x); });
  double int_dxi_psi =
      m.integrate_mu([&](double x) { return xi(x, 1) * t.psi(x); });
  std::vector<LaplaceRow> rows;
  int B = std::max(2, static_cast<int>(std::sqrt(sample.effective_samples)));
  for (double s : s_grid) {
    if (std::abs(s) * 2.0 / (beta * sample.N) > t.t_max())
      throw Error(ErrorCode::step_size,
                  "Laplace grid point violates |s| 2/(beta N) <= t_max");
    LaplaceRow row;
    row.s = s;
    if (s == 0.0) {
      rows.push_back(row);
      continue;
    }
    auto est = stats::log_mean_exp(sample.values, s, B);
    double predicted = -(1.0 - beta / 2.0) * (2.0 * s / beta) * int_dpsi -
                       (s * s / beta) * int_dxi_psi;
    row.gap = est.value - predicted;
    row.stderr_jack = est.stderr_jack;
    row.unstable = est.stderr_jack > 0.5 * (std::abs(est.value) + 1e-3);
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<double> default_s_grid(double beta, int N, double t_max) {
  // scaled so the step precondition holds with a factor-2 margin
  double cap = 0.5 * t_max * beta * N / 2.0;
  double scale = std::min(1.0, cap);
  return {-scale, -0.5 * scale, -0.25 * scale, 0.25 * scale, 0.5 * scale, scale};
}

struct AnisotropyRow {
  int N = 0;
  double mean_abs_over_N = 0.0;
  double stderr_est = 0.0;
};

// E|A[X, psi]| / N per N; exhibits the o(N) decay of the anisotropy
inline std::vector<AnisotropyRow> anisotropy_decay(
    const std::vector<std::vector<Configuration>>& chains_per_N,
    const TransportMap& t, const EquilibriumMeasure& m) {
  if (chains_per_N.size() < 2)
    throw Error(ErrorCode::domain, "need at least two values of N");
  std::vector<AnisotropyRow> rows;
  for (const auto& configs : chains_per_N) {
    AnisotropyRow row;
    row.N = configs.empty() ? 0 : configs.front().N();
    std::vector<double> vals;
    for (const auto& c : configs)
      vals.push_back(std::abs(anisotropy(c, t, m)) / c.N());
    row.mean_abs_over_N = stats::mean(vals);
    row.stderr_est = std::sqrt(stats::variance(vals) / vals.size());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace loggas
