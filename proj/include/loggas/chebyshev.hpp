#pragma once

#include <cmath>
#include <vector>

#include "loggas/error.hpp"

namespace loggas::cheb {

// Chebyshev machinery on an interval [a,b], mapped to u in [-1,1].
//
// Everything singular in this project reduces to three weighted integrals of
// Chebyshev polynomials with known closed forms:
//
//   int_{-1}^{1} T_k(u)/sqrt(1-u^2) du                  (plain moment)
//   int_{-1}^{1} log|v-u| T_k(u)/sqrt(1-u^2) du         (log kernel)
//   PV int_{-1}^{1} T_k(u)/(sqrt(1-u^2)(v-u)) du        (Cauchy kernel)
//
// A density that vanishes like a square root at the interval endpoints is
// represented through P(u) = h * mu(x(u)) * sqrt(1-u^2), which is smooth, so
// its T-expansion converges spectrally and the kernels above integrate it
// against log and Cauchy singularities without losing digits.

struct Grid {
  double a = 0.0, b = 0.0;
  int n = 0;
  std::vector<double> theta;  // (2j+1)pi/(2n), j = 0..n-1
  std::vector<double> x;      // mid + half*cos(theta_j), descending in x

  static Grid make(double a, double b, int n) {
    Grid g;
    g.a = a;
    g.b = b;
    g.n = n;
    g.theta.resize(n);
    g.x.resize(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int j = 0; j < n; ++j) {
      g.theta[j] = (2.0 * j + 1.0) * M_PI / (2.0 * n);
      g.x[j] = mid + half * std::cos(g.theta[j]);
    }
    return g;
  }

  double mid() const { return 0.5 * (a + b); }
  double half() const { return 0.5 * (b - a); }
  // Lebesgue weight for int f(y) dy = sum_j w_j f(x_j) (exact when
  // f*sqrt resolves in the first 2n-1 Chebyshev modes)
  double leb_w(int j) const {
    return M_PI * half() / n * std::sin(theta[j]);
  }
};

// Coefficients c_k of f(u) ~ sum_k c_k T_k(u) from values at first-kind nodes.
inline std::vector<double> dct(const std::vector<double>& theta,
                               const std::vector<double>& values) {
  int n = static_cast<int>(values.size());
  std::vector<double> c(n, 0.0);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += values[j] * std::cos(k * theta[j]);
    c[k] = 2.0 * s / n;
  }
  c[0] *= 0.5;
  return c;
}

// T-series on [a,b]; evaluation by Clenshaw.
struct Series {
  double a = 0.0, b = 0.0;
  std::vector<double> c;

  double to_u(double x) const { return (2.0 * x - (a + b)) / (b - a); }

  double eval(double x) const {
    double u = to_u(x);
    double b1 = 0.0, b2 = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
      double t = 2.0 * u * b1 - b2 + c[k];
      b2 = b1;
      b1 = t;
    }
    return u * b1 - b2 + (c.empty() ? 0.0 : c[0]);
  }

  Series derivative() const {
    int n = static_cast<int>(c.size());
    Series d;
    d.a = a;
    d.b = b;
    if (n <= 1) {
      d.c.assign(1, 0.0);
      return d;
    }
    d.c.assign(n - 1, 0.0);
    double scale = 2.0 / (b - a);
    std::vector<double> w(n + 1, 0.0);
    for (int k = n - 1; k >= 1; --k) {
      w[k - 1] = w[k + 1] + 2.0 * k * c[k];
    }
    for (int k = 0; k + 1 < n; ++k) d.c[k] = w[k] * scale;
    d.c[0] *= 0.5;
    return d;
  }
};

inline Series interpolate(const Grid& g, const std::vector<double>& values) {
  Series s;
  s.a = g.a;
  s.b = g.b;
  s.c = dct(g.theta, values);
  return s;
}

// --- closed-form kernel sums -------------------------------------------------

// sum_k p_k * int T_k(u)/sqrt(1-u^2) du  =  pi * p_0
inline double sum_moment(const std::vector<double>& p) {
  return p.empty() ? 0.0 : M_PI * p[0];
}

// sum_k p_k * Lambda_k(v),  Lambda_k(v) = int log|v-u| T_k(u)/sqrt(1-u^2) du.
// Inside:  Lambda_0 = -pi log 2,    Lambda_k = -(pi/k) T_k(v).
// Outside: with t = sign(v) (|v| - sqrt(v^2-1)),
//          Lambda_0 = -pi log(2|t|), Lambda_k = -(pi/k) t^k.
inline double sum_log_kernel(const std::vector<double>& p, double v) {
  int n = static_cast<int>(p.size());
  if (n == 0) return 0.0;
  double acc;
  if (std::abs(v) <= 1.0) {
    acc = p[0] * (-M_PI * std::log(2.0));
    double tk1 = v, tk2 = 1.0;  // T_1, T_0
    for (int k = 1; k < n; ++k) {
      double tk = (k == 1) ? v : 2.0 * v * tk1 - tk2;
      if (k > 1) {
        tk2 = tk1;
        tk1 = tk;
      }
      acc -= p[k] * (M_PI / k) * tk;
    }
  } else {
    double av = std::abs(v);
    double w = av - std::sqrt(av * av - 1.0);
    double t = (v > 0) ? w : -w;
    acc = p[0] * (-M_PI * std::log(2.0 * w));
    double tk = 1.0;
    for (int k = 1; k < n; ++k) {
      tk *= t;
      acc -= p[k] * (M_PI / k) * tk;
    }
  }
  return acc;
}

// sum_k p_k * Piv_k(v),  Piv_k(v) = PV int T_k(u)/(sqrt(1-u^2)(v-u)) du.
// Inside:  Piv_0 = 0,  Piv_k = -pi U_{k-1}(v) = -pi sin(k theta)/sin(theta).
// Outside: Piv_k = s^{k+1} pi w^k / sqrt(v^2-1), s = sign(v), w = |v|-sqrt(v^2-1).
// The outside form is rearranged as sum p_k (t^k - 1) plus sum p_k, because
// sum p_k = P(1) vanishes for square-root densities and the split avoids the
// 0 * infinity cancellation as v -> 1+.
inline double sum_cauchy_kernel(const std::vector<double>& p, double v) {
  int n = static_cast<int>(p.size());
  if (n == 0) return 0.0;
  if (std::abs(v) <= 1.0) {
    double theta = std::acos(std::min(1.0, std::max(-1.0, v)));
    double st = std::sin(theta);
    double acc = 0.0;
    if (st < 1e-12) {
      // U_{k-1}(+-1) = k (+-1)^{k-1}
      double sgn = (v > 0) ? 1.0 : -1.0;
      double pw = 1.0;
      for (int k = 1; k < n; ++k) {
        acc -= p[k] * M_PI * k * pw;
        pw *= sgn;
      }
      return acc;
    }
    for (int k = 1; k < n; ++k) acc -= p[k] * M_PI * std::sin(k * theta) / st;
    return acc;
  }
  double av = std::abs(v);
  double s = (v > 0) ? 1.0 : -1.0;
  double w = av - std::sqrt(av * av - 1.0);
  double t = s * w;
  double edge_sum = 0.0;  // P(1) or P(-1)
  double diff_sum = 0.0;
  double tk = 1.0, sk = 1.0;
  for (int k = 0; k < n; ++k) {
    edge_sum += p[k] * sk;
    diff_sum += p[k] * (tk - sk);
    tk *= t;
    sk *= s;
  }
  return s * M_PI * (diff_sum + edge_sum) / std::sqrt(av * av - 1.0);
}

// int T_k(u) log(1-u^2) / sqrt(1-u^2) du: -2 pi log 2 for k = 0,
// -(2pi/k) for even k >= 2, 0 for odd k.  (Lambda_k(1) + Lambda_k(-1).)
inline double sum_log_edge(const std::vector<double>& p) {
  int n = static_cast<int>(p.size());
  if (n == 0) return 0.0;
  double acc = p[0] * (-2.0 * M_PI * std::log(2.0));
  for (int k = 2; k < n; k += 2) acc -= p[k] * 2.0 * M_PI / k;
  return acc;
}

}  // namespace loggas::cheb
