#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "loggas/chebyshev.hpp"
#include "loggas/error.hpp"
#include "loggas/polynomial.hpp"

namespace loggas {

// Confining field V with derivative evaluators up to a declared regularity
// order. Values are immutable after construction and safe to share.
class Potential {
 public:
  using Evaluator = std::function<double(double, int)>;

  Potential() = default;
  Potential(std::string name, Evaluator f, int regularity_order,
            std::pair<double, double> domain_hint)
      : name_(std::move(name)),
        f_(std::move(f)),
        p_(regularity_order),
        hint_(domain_hint) {}

  static Potential from_polynomial(std::string name, Polynomial poly,
                                   std::pair<double, double> hint) {
    auto ev = [poly](double x, int k) { return poly.derivative(x, k); };
    return Potential(std::move(name), ev, 64, hint);
  }

  double operator()(double x, int order = 0) const {
    if (order > p_)
      throw Error(ErrorCode::regularity,
                  "potential '" + name_ + "' has regularity order " +
                      std::to_string(p_) + ", derivative " +
                      std::to_string(order) + " requested");
    return f_(x, order);
  }

  const std::string& name() const { return name_; }
  int regularity_order() const { return p_; }
  std::pair<double, double> domain_hint() const { return hint_; }

 private:
  std::string name_;
  Evaluator f_;
  int p_ = 0;
  std::pair<double, double> hint_{-2.0, 2.0};
};

inline double eval_potential(const Potential& v, double x, int order) {
  return v(x, order);
}

struct GrowthReport {
  double liminf_estimate = 0.0;
  bool passes = false;
};

// Finite probe-ring surrogate for liminf V(x)/(2 log|x|) > 1. The true liminf
// is not computable; the ring at probe_radius with a small margin is the
// documented heuristic.
inline GrowthReport check_growth(const Potential& v, double probe_radius,
                                 double margin = 0.01) {
  auto hint = v.domain_hint();
  double diam = hint.second - hint.first;
  if (probe_radius <= 10.0 * diam)
    throw Error(ErrorCode::domain, "probe radius must exceed 10 x domain diameter");
  double worst = INFINITY;
  for (double r : {probe_radius, 1.5 * probe_radius, 2.25 * probe_radius}) {
    for (double s : {-1.0, 1.0}) {
      double x = s * r;
      worst = std::min(worst, v(x, 0) / (2.0 * std::log(std::abs(x))));
    }
  }
  return GrowthReport{worst, worst > 1.0 + margin};
}

namespace detail {

inline bool parse_catalog_param(const std::string& name, const std::string& stem,
                                double* t) {
  if (name.rfind(stem + "(", 0) != 0 || name.back() != ')') return false;
  *t = std::stod(name.substr(stem.size() + 1,
                             name.size() - stem.size() - 2));
  return true;
}

}  // namespace detail

// Example potentials. The quartic pair realizes bulk and edge criticality;
// two_cut_quartic(t) with t > 1 has a two-interval support.
inline Potential catalog(const std::string& name) {
  if (name == "gaussian") {
    return Potential::from_polynomial("gaussian", Polynomial({0, 0, 0.5}),
                                      {-2.0, 2.0});
  }
  if (name == "bulk_critical_quartic") {
    return Potential::from_polynomial("bulk_critical_quartic",
                                      Polynomial({0, 0, -1.0, 0, 0.25}),
                                      {-2.0, 2.0});
  }
  if (name == "edge_critical_quartic") {
    return Potential::from_polynomial(
        "edge_critical_quartic",
        Polynomial({0, 8.0 / 5.0, 1.0 / 5.0, -4.0 / 15.0, 1.0 / 20.0}),
        {-2.0, 2.0});
  }
  double t = 0.0;
  if (detail::parse_catalog_param(name, "two_cut_quartic", &t)) {
    if (!(t > 1.0))
      throw Error(ErrorCode::domain, "two_cut_quartic requires t > 1");
    return Potential::from_polynomial(name, Polynomial({0, 0, -t, 0, 0.25}),
                                      {-std::sqrt(2.0 * t + 2.0),
                                       std::sqrt(2.0 * t + 2.0)});
  }
  throw Error(ErrorCode::unknown_catalog, "unknown catalog potential '" + name + "'");
}

// User potentials arrive as (x, V(x)) samples and are fit by a single
// Chebyshev polynomial of degree >= 5 so that third derivatives exist.
inline Potential potential_from_samples(const std::vector<double>& xs,
                                        const std::vector<double>& vs,
                                        std::string name = "user") {
  if (xs.size() != vs.size() || xs.size() < 8)
    throw Error(ErrorCode::config_invalid,
                "potential samples need at least 8 (x, V) rows");
  double lo = xs.front(), hi = xs.front();
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  int deg = std::min<int>(24, static_cast<int>(xs.size()) - 1);
  deg = std::max(deg, 5);
  // least-squares in the T-basis via normal equations (small, well scaled)
  int m = deg + 1;
  std::vector<double> ata(m * m, 0.0), atb(m, 0.0), row(m);
  for (size_t i = 0; i < xs.size(); ++i) {
    double u = (2.0 * xs[i] - (lo + hi)) / (hi - lo);
    row[0] = 1.0;
    if (m > 1) row[1] = u;
    for (int k = 2; k < m; ++k) row[k] = 2.0 * u * row[k - 1] - row[k - 2];
    for (int a = 0; a < m; ++a) {
      atb[a] += row[a] * vs[i];
      for (int b = 0; b < m; ++b) ata[a * m + b] += row[a] * row[b];
    }
  }
  // Gaussian elimination with partial pivoting
  std::vector<double> c(atb);
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::abs(ata[r * m + col]) > std::abs(ata[piv * m + col])) piv = r;
    for (int k = 0; k < m; ++k) std::swap(ata[col * m + k], ata[piv * m + k]);
    std::swap(c[col], c[piv]);
    double d = ata[col * m + col];
    for (int r = 0; r < m; ++r) {
      if (r == col || ata[r * m + col] == 0.0) continue;
      double f = ata[r * m + col] / d;
      for (int k = col; k < m; ++k) ata[r * m + k] -= f * ata[col * m + k];
      c[r] -= f * c[col];
    }
  }
  cheb::Series fit;
  fit.a = lo;
  fit.b = hi;
  fit.c.resize(m);
  for (int k = 0; k < m; ++k) fit.c[k] = c[k] / ata[k * m + k];
  std::vector<cheb::Series> ders{fit};
  for (int k = 1; k <= 3; ++k) ders.push_back(ders.back().derivative());
  auto ev = [ders](double x, int k) {
    if (k >= static_cast<int>(ders.size()))
      throw Error(ErrorCode::regularity, "sampled potential differentiable to order 3");
    return ders[static_cast<size_t>(k)].eval(x);
  };
  return Potential(std::move(name), ev, 3, {lo, hi});
}

}  // namespace loggas
