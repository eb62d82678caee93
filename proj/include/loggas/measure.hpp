#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "loggas/chebyshev.hpp"
#include "loggas/error.hpp"
#include "loggas/potential.hpp"
#include "loggas/test_function.hpp"

namespace loggas {

struct Interval {
  double lo = 0.0, hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double half() const { return 0.5 * (hi - lo); }
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct SingularPoint {
  double position = 0.0;
  int order = 0;  // k_i; density vanishes to order 2 k_i
};

struct ZetaReport {
  double max_abs_on_support = 0.0;
  double min_off_support = 0.0;
  double dyson_residual = 0.0;
};

// Equilibrium measure on a finite union of intervals, held on per-interval
// Chebyshev grids. The density is stored both as a callable and as node
// values; the T-expansion of P(u) = half * rho * sin(theta) drives the
// closed-form log and Cauchy kernels, which is what keeps h^mu and the
// principal values at spectral accuracy.
class EquilibriumMeasure {
 public:
  struct Part {
    cheb::Grid grid;
    std::vector<double> rho;    // density at nodes
    std::vector<double> leb_w;  // plain Lebesgue weights
    std::vector<double> mu_w;   // leb_w * rho
    std::vector<double> pcoef;  // T-coefficients of P(u)
  };

  EquilibriumMeasure() = default;

  static EquilibriumMeasure build(std::string name, std::vector<Interval> support,
                                  std::function<double(double)> density,
                                  std::vector<SingularPoint> singular,
                                  const Potential* V, int nodes_per_interval = 256,
                                  bool sigma_form = true,
                                  std::function<double(double)> S0 = nullptr) {
    EquilibriumMeasure m;
    m.name_ = std::move(name);
    m.support_ = std::move(support);
    std::sort(m.support_.begin(), m.support_.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    m.singular_ = std::move(singular);
    m.sigma_form_ = sigma_form;
    m.raw_density_ = std::move(density);
    m.S0_ = std::move(S0);

    for (const Interval& iv : m.support_) {
      Part part;
      part.grid = cheb::Grid::make(iv.lo, iv.hi, nodes_per_interval);
      part.rho.resize(nodes_per_interval);
      part.leb_w.resize(nodes_per_interval);
      for (int j = 0; j < nodes_per_interval; ++j) {
        part.rho[j] = m.raw_density_(part.grid.x[j]);
        part.leb_w[j] = part.grid.leb_w(j);
      }
      m.parts_.push_back(std::move(part));
    }
    double raw_mass = 0.0;
    for (const Part& p : m.parts_)
      for (size_t j = 0; j < p.rho.size(); ++j) raw_mass += p.leb_w[j] * p.rho[j];
    if (!(raw_mass > 0.0))
      throw Error(ErrorCode::domain, "density must have positive mass");
    m.scale_ = 1.0 / raw_mass;
    for (Part& p : m.parts_) {
      int n = p.grid.n;
      p.mu_w.resize(n);
      std::vector<double> P(n);
      for (int j = 0; j < n; ++j) {
        p.rho[j] *= m.scale_;
        p.mu_w[j] = p.leb_w[j] * p.rho[j];
        P[j] = p.grid.half() * p.rho[j] * std::sin(p.grid.theta[j]);
      }
      p.pcoef = cheb::dct(p.grid.theta, P);
    }
    m.finalize(V);
    return m;
  }

  // --- basic accessors -------------------------------------------------------

  const std::string& name() const { return name_; }
  const std::vector<Interval>& support() const { return support_; }
  const std::vector<SingularPoint>& singular_points() const { return singular_; }
  const std::vector<Part>& parts() const { return parts_; }
  bool sigma_form() const { return sigma_form_; }
  double c_V() const { return c_V_; }
  double energy_value() const { return I_V_; }      // I_V(mu_V)
  double log_energy() const { return log_energy_; } // double integral of -log|x-y|

  double density(double x) const {
    if (interval_of(x) < 0) return 0.0;
    return scale_ * raw_density_(x);
  }

  // used by deserialization, where the field potential is not at hand
  void set_constants(double c_V, double I_V) {
    c_V_ = c_V;
    I_V_ = I_V;
  }

  double total_width() const {
    return support_.back().hi - support_.front().lo;
  }

  double mass() const {
    double s = 0.0;
    for (const Part& p : parts_)
      for (double w : p.mu_w) s += w;
    return s;
  }

  int interval_of(double x) const {
    for (size_t l = 0; l < support_.size(); ++l)
      if (support_[l].contains(x)) return static_cast<int>(l);
    return -1;
  }

  double sigma(double x) const {
    double s = 1.0;
    for (const Interval& iv : support_)
      s *= std::sqrt(std::abs(x - iv.lo) * std::abs(x - iv.hi));
    return s;
  }

  // Sign of the analytic branch of sqrt(prod (x - endpoints)) on interval l:
  // +1 on the rightmost cut, alternating to the left. On a one-cut support
  // this is identically +1 and sigma_signed == sigma.
  double interval_sign(int l) const {
    int from_right = static_cast<int>(support_.size()) - 1 - l;
    return (from_right % 2 == 0) ? 1.0 : -1.0;
  }

  // signed weight; x is attributed to the nearest interval
  double sigma_signed(double x) const {
    int best = 0;
    double bd = 1e300;
    for (size_t l = 0; l < support_.size(); ++l) {
      double d = std::max({support_[l].lo - x, x - support_[l].hi, 0.0});
      if (d < bd) {
        bd = d;
        best = static_cast<int>(l);
      }
    }
    return interval_sign(best) * sigma(x);
  }

  // S = density / sigma through the stored factorization when available
  double S(double x) const {
    if (S0_) {
      double s = S0_(x);
      for (const SingularPoint& sp : singular_)
        for (int i = 0; i < 2 * sp.order; ++i) s *= (x - sp.position);
      return s;
    }
    return density(x) / sigma(x);
  }

  double S0(double x) const {
    if (S0_) return S0_(x);
    double s = density(x) / sigma(x);
    for (const SingularPoint& sp : singular_)
      for (int i = 0; i < 2 * sp.order; ++i) s /= (x - sp.position);
    return s;
  }

  // neighborhood of the support dilated per interval by the given fraction
  std::vector<Interval> dilated_support(double fraction) const {
    std::vector<Interval> out;
    for (const Interval& iv : support_) {
      double pad = fraction * iv.width();
      out.push_back({iv.lo - pad, iv.hi + pad});
    }
    return out;
  }

  // --- integration -------------------------------------------------------------

  template <class F>
  double integrate_mu(F&& f) const {
    double acc = 0.0;
    for (const Part& p : parts_)
      for (int j = 0; j < p.grid.n; ++j) acc += p.mu_w[j] * f(p.grid.x[j]);
    return acc;
  }

  // int f(y)/sigma(y) dy over the support
  template <class F>
  double integrate_inv_sigma(F&& f) const {
    double acc = 0.0;
    for (const Part& p : parts_)
      for (int j = 0; j < p.grid.n; ++j)
        acc += p.leb_w[j] * f(p.grid.x[j]) / sigma(p.grid.x[j]);
    return acc;
  }

  // h^mu(x) = int -log|x-y| dmu(y)
  double log_potential(double x) const {
    double acc = 0.0;
    for (const Part& p : parts_) {
      double v = (x - p.grid.mid()) / p.grid.half();
      acc -= M_PI * p.pcoef[0] * std::log(p.grid.half());
      acc -= cheb::sum_log_kernel(p.pcoef, v);
    }
    return acc;
  }

  // PV int dmu(y)/(x-y) through the closed-form Cauchy kernel
  double pv_kernel(double x) const {
    double acc = 0.0;
    for (const Part& p : parts_) {
      double v = (x - p.grid.mid()) / p.grid.half();
      acc += cheb::sum_cauchy_kernel(p.pcoef, v) / p.grid.half();
    }
    return acc;
  }

  // PV int f(y)/(sigma_signed(y)(y-x)) dy via the regularized split
  // f(y) = (f(y)-f(x)) + f(x). The weight's own principal value vanishes
  // only for the signed branch once the support has several cuts.
  template <class F, class DF>
  double pv_inv_sigma(F&& f, DF&& df, double x) const {
    double fx = f(x);
    double cutoff = 1e-7 * total_width();
    double acc = 0.0;
    for (size_t l = 0; l < parts_.size(); ++l) {
      const Part& p = parts_[l];
      double sgn = interval_sign(static_cast<int>(l));
      for (int j = 0; j < p.grid.n; ++j) {
        double y = p.grid.x[j];
        double dy = y - x;
        double q = (std::abs(dy) < cutoff) ? df(x) : (f(y) - fx) / dy;
        acc += sgn * p.leb_w[j] * q / sigma(y);
      }
    }
    return acc;
  }

  std::complex<double> stieltjes(std::complex<double> z) const {
    if (z.imag() == 0.0) {
      double x = z.real();
      double dist = 1e300;
      for (const Interval& iv : support_) {
        if (iv.contains(x)) dist = 0.0;
        dist = std::min(dist, std::min(std::abs(x - iv.lo), std::abs(x - iv.hi)));
      }
      double spacing = 0.0;
      for (const Part& p : parts_)
        spacing = std::max(spacing, M_PI * p.grid.half() / p.grid.n);
      if (dist <= spacing)
        throw Error(ErrorCode::proximity,
                    "stieltjes: real evaluation point too close to the support");
    }
    std::complex<double> acc = 0.0;
    for (const Part& p : parts_)
      for (int j = 0; j < p.grid.n; ++j) acc += p.mu_w[j] / (z - p.grid.x[j]);
    return acc;
  }

  // Ent(mu) = int mu log mu. For square-root densities the edge factor is
  // integrated through its closed form; the remaining factor is smooth.
  double entropy() const {
    double acc = 0.0;
    for (const Part& p : parts_) {
      double h = p.grid.half();
      if (!sigma_form_) {
        for (int j = 0; j < p.grid.n; ++j)
          acc += p.mu_w[j] * std::log(p.rho[j]);
        continue;
      }
      for (int j = 0; j < p.grid.n; ++j) {
        double edge = h * std::sin(p.grid.theta[j]);  // sqrt((x-a)(b-x))
        acc += p.mu_w[j] * std::log(p.rho[j] / edge);
      }
      double part_mass = M_PI * p.pcoef[0];
      acc += std::log(h) * part_mass;
      acc += 0.5 * cheb::sum_log_edge(p.pcoef);
    }
    return acc;
  }

 private:
  void finalize(const Potential* V) {
    // interior log-potential values once; median for c_V resists edge error
    log_energy_ = 0.0;
    for (const Part& p : parts_)
      for (int j = 0; j < p.grid.n; ++j)
        log_energy_ += p.mu_w[j] * log_potential(p.grid.x[j]);
    if (V) {
      std::vector<double> vals;
      for (const Part& p : parts_)
        for (int j = 0; j < p.grid.n; ++j)
          if (std::abs(std::cos(p.grid.theta[j])) < 0.95)
            vals.push_back(log_potential(p.grid.x[j]) + 0.5 * (*V)(p.grid.x[j], 0));
      std::nth_element(vals.begin(), vals.begin() + vals.size() / 2, vals.end());
      c_V_ = vals[vals.size() / 2];
      I_V_ = log_energy_ + integrate_mu([&](double x) { return (*V)(x, 0); });
    }
  }

  std::string name_;
  std::vector<Interval> support_;
  std::vector<SingularPoint> singular_;
  std::vector<Part> parts_;
  std::function<double(double)> raw_density_;
  std::function<double(double)> S0_;
  double scale_ = 1.0;
  double c_V_ = NAN;
  double I_V_ = NAN;
  double log_energy_ = NAN;
  bool sigma_form_ = true;
};

// zeta_V(x) = h^mu(x) + V(x)/2 - c_V; zero on the support, positive off it
inline double zeta(const EquilibriumMeasure& m, const Potential& V, double x) {
  return m.log_potential(x) + 0.5 * V(x, 0) - m.c_V();
}

// sup over the interior grid of |V'/2 - PV int dmu/(x-y)|, computed through
// the regularized-split engine with f = mu * sigma.
inline double dyson_residual(const EquilibriumMeasure& m, const Potential& V) {
  double step = 1e-6 * m.total_width();
  auto f = [&](double x) { return m.density(x) * m.sigma_signed(x); };
  auto df = [&](double x) { return (f(x + step) - f(x - step)) / (2.0 * step); };
  double worst = 0.0;
  for (const auto& p : m.parts()) {
    for (int j = 0; j < p.grid.n; ++j) {
      double x = p.grid.x[j];
      double pv = -m.pv_inv_sigma(f, df, x);
      worst = std::max(worst, std::abs(0.5 * V(x, 1) - pv));
    }
  }
  return worst;
}

// sup over the interior grid of |(2 pi mu)^2 + V'^2 - 4L|,
// L(x) = int (V'(x)-V'(y))/(x-y) dmu(y)
inline double quadratic_identity_residual(const EquilibriumMeasure& m,
                                          const Potential& V) {
  double cutoff = 1e-7 * m.total_width();
  double worst = 0.0;
  for (const auto& p : m.parts()) {
    for (int j = 0; j < p.grid.n; ++j) {
      double x = p.grid.x[j];
      double v1 = V(x, 1);
      double L = m.integrate_mu([&](double y) {
        double dy = x - y;
        if (std::abs(dy) < cutoff) return V(x, 2);
        return (v1 - V(y, 1)) / dy;
      });
      double mu = p.rho[j];
      double r = (2.0 * M_PI * mu) * (2.0 * M_PI * mu) + v1 * v1 - 4.0 * L;
      worst = std::max(worst, std::abs(r));
    }
  }
  return worst;
}

// |  iint (h(x)-h(y))/(x-y) dmu dmu - int V' h dmu |
inline double equil_identity_gap(const EquilibriumMeasure& m, const Potential& V,
                                 const TestFunction& h) {
  double cutoff = 1e-7 * m.total_width();
  double lhs = 0.0;
  for (const auto& pa : m.parts()) {
    for (int i = 0; i < pa.grid.n; ++i) {
      double x = pa.grid.x[i];
      double hx = h(x, 0);
      double inner = 0.0;
      for (const auto& pb : m.parts()) {
        for (int j = 0; j < pb.grid.n; ++j) {
          double y = pb.grid.x[j];
          double dy = x - y;
          double q = (std::abs(dy) < cutoff) ? h(x, 1) : (hx - h(y, 0)) / dy;
          inner += pb.mu_w[j] * q;
        }
      }
      lhs += pa.mu_w[i] * inner;
    }
  }
  double rhs = m.integrate_mu([&](double x) { return V(x, 1) * h(x, 0); });
  return std::abs(lhs - rhs);
}

inline ZetaReport verify_euler_lagrange(const EquilibriumMeasure& m,
                                        const Potential& V) {
  ZetaReport rep;
  for (const auto& p : m.parts())
    for (int j = 0; j < p.grid.n; ++j)
      rep.max_abs_on_support =
          std::max(rep.max_abs_on_support, std::abs(zeta(m, V, p.grid.x[j])));
  // off-support probe grid: outer flanks plus every gap, offsets 2%..50%
  double W = m.total_width();
  const auto& sup = m.support();
  std::vector<double> probes;
  for (int i = 0; i < 24; ++i) {
    double d = W * (0.02 + 0.48 * i / 23.0);
    probes.push_back(sup.front().lo - d);
    probes.push_back(sup.back().hi + d);
  }
  for (size_t l = 0; l + 1 < sup.size(); ++l) {
    double glo = sup[l].hi, ghi = sup[l + 1].lo;
    for (int i = 0; i < 24; ++i) {
      double f = 0.02 + 0.96 * i / 23.0;
      probes.push_back(glo + f * (ghi - glo));
    }
  }
  rep.min_off_support = 1e300;
  for (double x : probes)
    if (m.interval_of(x) < 0)
      rep.min_off_support = std::min(rep.min_off_support, zeta(m, V, x));
  rep.dyson_residual = dyson_residual(m, V);
  return rep;
}

inline double entropy(const EquilibriumMeasure& m) { return m.entropy(); }

// --- catalog measures with closed-form densities ------------------------------

inline EquilibriumMeasure catalog_measure(const std::string& name,
                                          int nodes_per_interval = 256) {
  if (name == "gaussian") {
    Potential V = catalog("gaussian");
    return EquilibriumMeasure::build(
        name, {{-2.0, 2.0}},
        [](double x) { return std::sqrt(std::max(4.0 - x * x, 0.0)) / (2.0 * M_PI); },
        {}, &V, nodes_per_interval, true,
        [](double) { return 1.0 / (2.0 * M_PI); });
  }
  if (name == "bulk_critical_quartic") {
    Potential V = catalog(name);
    return EquilibriumMeasure::build(
        name, {{-2.0, 2.0}},
        [](double x) {
          return x * x * std::sqrt(std::max(4.0 - x * x, 0.0)) / (2.0 * M_PI);
        },
        {{0.0, 1}}, &V, nodes_per_interval, true,
        [](double) { return 1.0 / (2.0 * M_PI); });
  }
  if (name == "edge_critical_quartic") {
    Potential V = catalog(name);
    return EquilibriumMeasure::build(
        name, {{-2.0, 2.0}},
        [](double x) {
          return (x - 2.0) * (x - 2.0) *
                 std::sqrt(std::max(4.0 - x * x, 0.0)) / (10.0 * M_PI);
        },
        {{2.0, 1}}, &V, nodes_per_interval, true,
        [](double) { return 1.0 / (10.0 * M_PI); });
  }
  double t = 0.0;
  if (detail::parse_catalog_param(name, "two_cut_quartic", &t)) {
    Potential V = catalog(name);
    double a = std::sqrt(2.0 * t - 2.0), b = std::sqrt(2.0 * t + 2.0);
    auto dens = [a, b](double x) {
      double q = (x * x - a * a) * (b * b - x * x);
      return std::abs(x) * std::sqrt(std::max(q, 0.0)) / (2.0 * M_PI);
    };
    return EquilibriumMeasure::build(
        name, {{-b, -a}, {a, b}}, dens, {}, &V, nodes_per_interval, true,
        [](double x) { return std::abs(x) / (2.0 * M_PI); });
  }
  throw Error(ErrorCode::unknown_catalog, "no catalog measure named '" + name + "'");
}

// Synthetic measure from an arbitrary density (tests, pushforwards of
// non-sigma-form data); no factorization is implied.
inline EquilibriumMeasure measure_from_density(
    std::vector<Interval> support, std::function<double(double)> density,
    int nodes_per_interval = 128) {
  return EquilibriumMeasure::build("synthetic", std::move(support),
                                   std::move(density), {}, nullptr,
                                   nodes_per_interval, false);
}

}  // namespace loggas
