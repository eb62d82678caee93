#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace loggas::stats {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// standard error of the mean from B batch means
inline double batch_means_stderr(const std::vector<double>& v, int B) {
  B = std::max(2, B);
  size_t len = v.size() / B;
  if (len == 0) return NAN;
  std::vector<double> bm(B);
  for (int b = 0; b < B; ++b) {
    double s = 0.0;
    for (size_t i = 0; i < len; ++i) s += v[b * len + i];
    bm[b] = s / len;
  }
  return std::sqrt(variance(bm) / B);
}

// standard error of the sample variance from batch variances
inline double batch_variance_stderr(const std::vector<double>& v, int B) {
  B = std::max(2, B);
  size_t len = v.size() / B;
  if (len < 2) return NAN;
  std::vector<double> bv(B);
  for (int b = 0; b < B; ++b) {
    std::vector<double> chunk(v.begin() + b * len, v.begin() + (b + 1) * len);
    bv[b] = variance(chunk);
  }
  return std::sqrt(variance(bv) / B);
}

// Integrated autocorrelation time tau = 1 + 2 sum_k rho_k with the summation
// window grown until the estimate stabilizes within 2%.
inline double integrated_autocorrelation(const std::vector<double>& v) {
  size_t n = v.size();
  if (n < 8) return 1.0;
  double m = mean(v);
  double c0 = 0.0;
  for (double x : v) c0 += (x - m) * (x - m);
  c0 /= n;
  if (c0 == 0.0) return 1.0;
  double tau = 1.0, prev = 1.0;
  size_t wmax = n / 3;
  for (size_t k = 1; k <= wmax; ++k) {
    double ck = 0.0;
    for (size_t i = 0; i + k < n; ++i) ck += (v[i] - m) * (v[i + k] - m);
    ck /= (n - k);
    tau += 2.0 * ck / c0;
    if (k % 5 == 0) {
      if (k >= 10 && std::abs(tau - prev) < 0.02 * std::abs(tau)) break;
      prev = tau;
    }
  }
  return std::max(tau, 1.0);
}

// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2)
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 ? term : -term);
    if (term < 1e-12) break;
  }
  return std::min(1.0, std::max(0.0, q));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// one-sample KS against Normal(mu, var); n_eff accounts for correlation
inline KsResult ks_test_normal(std::vector<double> v, double mu, double var,
                               double n_eff = -1.0) {
  std::sort(v.begin(), v.end());
  double n = static_cast<double>(v.size());
  if (n_eff <= 0) n_eff = n;
  double sd = std::sqrt(var);
  double d = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    double F = normal_cdf((v[i] - mu) / sd);
    d = std::max(d, std::abs(F - (i + 1) / n));
    d = std::max(d, std::abs(F - i / n));
  }
  double rn = std::sqrt(n_eff);
  double lambda = (rn + 0.12 + 0.11 / rn) * d;
  return {d, kolmogorov_q(lambda)};
}

inline KsResult ks_test_two_sample(std::vector<double> a, std::vector<double> b,
                                   double n_eff_a = -1, double n_eff_b = -1) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (n_eff_a <= 0) n_eff_a = static_cast<double>(a.size());
  if (n_eff_b <= 0) n_eff_b = static_cast<double>(b.size());
  double d = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  double ne = n_eff_a * n_eff_b / (n_eff_a + n_eff_b);
  double rn = std::sqrt(ne);
  double lambda = (rn + 0.12 + 0.11 / rn) * d;
  return {d, kolmogorov_q(lambda)};
}

// log E[exp(s X)] with a delete-one-batch jackknife error bar
struct LogLaplaceEstimate {
  double value = 0.0;
  double stderr_jack = 0.0;
};

inline LogLaplaceEstimate log_mean_exp(const std::vector<double>& x, double s,
                                       int B) {
  B = std::max(2, B);
  size_t len = x.size() / B;
  double shift = -1e300;
  for (double v : x) shift = std::max(shift, s * v);
  double total = 0.0;
  std::vector<double> batch_sum(B, 0.0);
  for (int b = 0; b < B; ++b)
    for (size_t i = 0; i < len; ++i)
      batch_sum[b] += std::exp(s * x[b * len + i] - shift);
  for (int b = 0; b < B; ++b) total += batch_sum[b];
  size_t n = len * B;
  double full = std::log(total / n) + shift;
  std::vector<double> loo(B);
  for (int b = 0; b < B; ++b)
    loo[b] = std::log((total - batch_sum[b]) / (n - len)) + shift;
  double lm = mean(loo);
  double acc = 0.0;
  for (double v : loo) acc += (v - lm) * (v - lm);
  double se = std::sqrt(acc * (B - 1) / B);
  return {full, se};
}

struct HistogramRow {
  double bin_left, bin_right;
  double count;
  double gaussian_pdf_at_center;
};

inline std::vector<HistogramRow> histogram(const std::vector<double>& v,
                                           double mu, double var, int nbins) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  if (hi <= lo) hi = lo + 1.0;
  std::vector<HistogramRow> rows(nbins);
  double w = (hi - lo) / nbins;
  for (int b = 0; b < nbins; ++b)
    rows[b] = {lo + b * w, lo + (b + 1) * w, 0.0, 0.0};
  for (double x : v) {
    int b = std::min(nbins - 1, static_cast<int>((x - lo) / w));
    rows[b].count += 1.0;
  }
  double sd = std::sqrt(var);
  for (auto& r : rows) {
    double c = 0.5 * (r.bin_left + r.bin_right);
    double z = (c - mu) / sd;
    r.gaussian_pdf_at_center = std::exp(-0.5 * z * z) / (sd * std::sqrt(2 * M_PI));
  }
  return rows;
}

}  // namespace loggas::stats
