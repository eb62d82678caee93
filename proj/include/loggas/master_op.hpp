#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "loggas/chebyshev.hpp"
#include "loggas/error.hpp"
#include "loggas/measure.hpp"
#include "loggas/potential.hpp"
#include "loggas/test_function.hpp"

namespace loggas {

// P.V. int f(y) / (sigma(y) (y - x)) dy for x strictly inside the support,
// through the regularized split; the weight's own principal value vanishes.
template <class F, class DF>
double pv_integral(F&& f, DF&& df, const EquilibriumMeasure& m, double x) {
  int l = m.interval_of(x);
  if (l < 0 || x == m.support()[l].lo || x == m.support()[l].hi)
    throw Error(ErrorCode::domain, "pv_integral: pole must lie inside a support interval");
  return m.pv_inv_sigma(f, df, x);
}

struct ConditionsReport {
  std::vector<double> x1;                // int xi y^d / sigma, d = 0..n-1
  std::vector<std::vector<double>> x2;   // per singular point, d = 1..2k_i
  std::vector<double> x1_signed;         // same moments against the analytic branch
  double tolerance = 0.0;
  bool satisfied = false;
};

namespace detail_op {

inline double sup_norm(const TestFunction& xi, const EquilibriumMeasure& m) {
  double s = 0.0;
  for (const auto& p : m.parts())
    for (double x : p.grid.x) s = std::max(s, std::abs(xi(x, 0)));
  return s;
}

// (xi(y) - Taylor_{d-1} xi around s) / (y-s)^d, switching to the Taylor tail
// near the removable point
inline double taylor_remainder_quotient(const TestFunction& xi, double s,
                                        int d, double y, double scale) {
  double dy = y - s;
  if (std::abs(dy) > 1e-3 * scale) {
    double taylor = 0.0, fact = 1.0, pw = 1.0;
    for (int j = 0; j < d; ++j) {
      taylor += xi(s, j) * pw / fact;
      pw *= dy;
      fact *= (j + 1);
    }
    return (xi(y, 0) - taylor) / std::pow(dy, d);
  }
  double acc = 0.0, fact = 1.0, pw = 1.0;
  for (int j = 0; j < d; ++j) fact *= (j + 1);
  int max_order = std::min(xi.regularity_order(), d + 8);
  for (int j = d; j <= max_order; ++j) {
    acc += xi(s, j) * pw / fact;
    pw *= dy;
    fact *= (j + 1);
  }
  return acc;
}

}  // namespace detail_op

// The (X1)/(X2) admissibility functionals. X1 moments are reported against
// the plain 1/sigma weight and, for multi-cut supports, also against the
// sign-alternating branch that the inversion formula actually requires.
inline ConditionsReport check_conditions(const TestFunction& xi,
                                         const EquilibriumMeasure& m,
                                         double tol = 1e-8) {
  int kmax = 0;
  for (const auto& sp : m.singular_points()) kmax = std::max(kmax, 2 * sp.order);
  if (xi.regularity_order() < 2 * kmax + 4)
    throw Error(ErrorCode::regularity,
                "test function needs regularity at least " +
                    std::to_string(2 * kmax + 4));
  ConditionsReport rep;
  rep.tolerance = tol;
  int ncut = static_cast<int>(m.support().size());
  for (int d = 0; d + 1 < ncut; ++d) {
    rep.x1.push_back(
        m.integrate_inv_sigma([&](double y) { return xi(y, 0) * std::pow(y, d); }));
    double signed_val = 0.0;
    for (size_t l = 0; l < m.parts().size(); ++l) {
      const auto& p = m.parts()[l];
      double sg = m.interval_sign(static_cast<int>(l));
      for (int j = 0; j < p.grid.n; ++j)
        signed_val += sg * p.leb_w[j] * xi(p.grid.x[j], 0) *
                      std::pow(p.grid.x[j], d) / m.sigma(p.grid.x[j]);
    }
    rep.x1_signed.push_back(signed_val);
  }
  double width = m.total_width();
  for (const auto& sp : m.singular_points()) {
    std::vector<double> res;
    for (int d = 1; d <= 2 * sp.order; ++d) {
      res.push_back(m.integrate_inv_sigma([&](double y) {
        return detail_op::taylor_remainder_quotient(xi, sp.position, d, y, width);
      }));
    }
    rep.x2.push_back(std::move(res));
  }
  double gate = tol * (1.0 + detail_op::sup_norm(xi, m));
  rep.satisfied = true;
  for (double r : rep.x1)
    if (std::abs(r) >= gate) rep.satisfied = false;
  for (const auto& v : rep.x2)
    for (double r : v)
      if (std::abs(r) >= gate) rep.satisfied = false;
  return rep;
}

// Transport direction psi on a neighborhood U of the support, stored as
// piecewise Chebyshev interpolants with a compactly supported blend to zero.
class TransportMap {
 public:
  struct Piece {
    Interval iv;
    cheb::Series s, ds, d2s, d3s;
  };

  double psi(double x) const { return eval(x, 0); }
  double dpsi(double x) const { return eval(x, 1); }
  double d2psi(double x) const { return eval(x, 2); }
  double d3psi(double x) const { return eval(x, 3); }

  double c_xi() const { return c_xi_; }
  double c_xi_spread() const { return c_xi_spread_; }
  Interval U() const { return U_; }
  double t_max() const { return t_max_; }
  double c2_norm() const { return c2_norm_; }
  const std::vector<Piece>& pieces() const { return pieces_; }

  static TransportMap from_pieces(std::vector<Piece> pieces, double c_xi,
                                  Interval U) {
    TransportMap t;
    t.pieces_ = std::move(pieces);
    std::sort(t.pieces_.begin(), t.pieces_.end(),
              [](const Piece& a, const Piece& b) { return a.iv.lo < b.iv.lo; });
    t.c_xi_ = c_xi;
    t.U_ = U;
    t.finalize_norms();
    return t;
  }

  // build from a raw function (tests and synthetic transports); the function
  // is sampled on U and blended to zero outside
  static TransportMap from_function(const std::function<double(double)>& f,
                                    Interval U, double c_xi = 0.0, int n = 200) {
    std::vector<Piece> pieces;
    pieces.push_back(make_piece(U, f, n));
    TransportMap t;
    t.pieces_ = std::move(pieces);
    t.c_xi_ = c_xi;
    t.U_ = U;
    t.append_blends();
    t.finalize_norms();
    return t;
  }

  static Piece make_piece(Interval iv, const std::function<double(double)>& f,
                          int n) {
    auto g = cheb::Grid::make(iv.lo, iv.hi, n);
    std::vector<double> vals(g.n);
    for (int j = 0; j < g.n; ++j) vals[j] = f(g.x[j]);
    Piece p;
    p.iv = iv;
    p.s = cheb::interpolate(g, vals);
    p.ds = p.s.derivative();
    p.d2s = p.ds.derivative();
    p.d3s = p.d2s.derivative();
    return p;
  }

  void append_blends() {
    // quintic Hermite from (psi, psi', psi'') at each end of the covered
    // region down to zero over half the width of U
    double L = 0.5 * (U_.hi - U_.lo);
    auto add_blend = [&](double edge, int dir) {
      double v0 = eval(edge, 0), v1 = eval(edge, 1), v2 = eval(edge, 2);
      Interval biv = dir > 0 ? Interval{edge, edge + L} : Interval{edge - L, edge};
      auto hermite = [=](double x) {
        double s = dir > 0 ? (x - edge) / L : (edge - x) / L;  // 0 at edge
        double d1 = dir > 0 ? v1 * L : -v1 * L;
        double d2 = v2 * L * L;
        // quintic with value/slope/curvature at s=0 and zeros at s=1
        double h0 = 1 - 10 * s * s * s + 15 * s * s * s * s - 6 * s * s * s * s * s;
        double h1 = s - 6 * s * s * s + 8 * s * s * s * s - 3 * s * s * s * s * s;
        double h2 = 0.5 * s * s - 1.5 * s * s * s + 1.5 * s * s * s * s -
                    0.5 * s * s * s * s * s;
        return v0 * h0 + d1 * h1 + d2 * h2;
      };
      pieces_.push_back(make_piece(biv, hermite, 24));
    };
    std::sort(pieces_.begin(), pieces_.end(),
              [](const Piece& a, const Piece& b) { return a.iv.lo < b.iv.lo; });
    double lo_edge = pieces_.front().iv.lo;
    double hi_edge = pieces_.back().iv.hi;
    add_blend(lo_edge, -1);
    add_blend(hi_edge, +1);
    std::sort(pieces_.begin(), pieces_.end(),
              [](const Piece& a, const Piece& b) { return a.iv.lo < b.iv.lo; });
  }

  // C2 norm over U (the blend tails outside U do not enter t_max;
  // transport_configuration still verifies monotonicity explicitly)
  void finalize_norms() {
    double s0 = 0, s1 = 0, s2 = 0;
    double tol = 1e-9 * (U_.hi - U_.lo);
    for (const Piece& p : pieces_) {
      if (p.iv.hi < U_.lo + tol || p.iv.lo > U_.hi - tol) continue;
      for (int j = 0; j <= 256; ++j) {
        double x = p.iv.lo + (p.iv.hi - p.iv.lo) * j / 256.0;
        if (x < U_.lo || x > U_.hi) continue;
        s0 = std::max(s0, std::abs(p.s.eval(x)));
        s1 = std::max(s1, std::abs(p.ds.eval(x)));
        s2 = std::max(s2, std::abs(p.d2s.eval(x)));
      }
    }
    c2_norm_ = s0 + s1 + s2;
    t_max_ = c2_norm_ > 0 ? 1.0 / (2.0 * c2_norm_) : 1e300;
  }

  void set_c_xi_spread(double s) { c_xi_spread_ = s; }

 private:
  double eval(double x, int order) const {
    for (const Piece& p : pieces_) {
      if (x >= p.iv.lo && x <= p.iv.hi) {
        switch (order) {
          case 0: return p.s.eval(x);
          case 1: return p.ds.eval(x);
          case 2: return p.d2s.eval(x);
          default: return p.d3s.eval(x);
        }
      }
    }
    // between pieces inside U (guard slivers): extend the nearest piece
    if (x > U_.lo && x < U_.hi && !pieces_.empty()) {
      const Piece* best = &pieces_.front();
      double bd = 1e300;
      for (const Piece& p : pieces_) {
        double d = std::max({p.iv.lo - x, x - p.iv.hi, 0.0});
        if (d < bd) {
          bd = d;
          best = &p;
        }
      }
      switch (order) {
        case 0: return best->s.eval(x);
        case 1: return best->ds.eval(x);
        case 2: return best->d2s.eval(x);
        default: return best->d3s.eval(x);
      }
    }
    return 0.0;
  }

  std::vector<Piece> pieces_;
  double c_xi_ = 0.0;
  double c_xi_spread_ = 0.0;
  Interval U_{0.0, 0.0};
  double t_max_ = 0.0;
  double c2_norm_ = 0.0;
};

// Xi_V[psi](x) = -psi(x) V'(x)/2 + int (psi(x)-psi(y))/(x-y) dmu(y);
// the difference quotient becomes psi'(x) at coincidence.
template <class Psi, class DPsi>
double apply_master_operator(const EquilibriumMeasure& m, const Potential& V,
                             Psi&& psi, DPsi&& dpsi, double x) {
  double cutoff = 1e-7 * m.total_width();
  double px = psi(x);
  double acc = -0.5 * px * V(x, 1);
  for (const auto& p : m.parts()) {
    for (int j = 0; j < p.grid.n; ++j) {
      double y = p.grid.x[j];
      double d = x - y;
      double q = (std::abs(d) < cutoff) ? dpsi(x) : (px - psi(y)) / d;
      acc += p.mu_w[j] * q;
    }
  }
  return acc;
}

inline double apply_master_operator(const EquilibriumMeasure& m,
                                    const Potential& V, const TransportMap& t,
                                    double x) {
  return apply_master_operator(
      m, V, [&](double y) { return t.psi(y); },
      [&](double y) { return t.dpsi(y); }, x);
}

struct InvertOptions {
  double singular_guard_fraction = 0.05;  // of the interval width
  double u_margin_fraction = 0.15;        // of the interval width, per side
  double roundtrip_tol = 1e-5;            // x (1 + ||xi||_inf)
  double conditions_tol = 1e-8;
};

namespace detail_op {

inline double nearest_singular(const EquilibriumMeasure& m, double x) {
  double best = 1e300;
  for (const auto& sp : m.singular_points())
    if (std::abs(x - sp.position) < std::abs(x - best)) best = sp.position;
  return best;
}

// one-sided degree-4 polynomial extrapolation through 5 (x, y) pairs
inline double extrapolate4(const std::vector<double>& xs,
                           const std::vector<double>& ys, double x) {
  int n = static_cast<int>(xs.size());
  std::vector<double> w(ys);
  for (int lev = 1; lev < n; ++lev)
    for (int i = 0; i < n - lev; ++i)
      w[i] = ((x - xs[i + lev]) * w[i] + (xs[i] - x) * w[i + 1]) /
             (xs[i] - xs[i + lev]);
  return w[0];
}

}  // namespace detail_op

// Invert Xi_V: construct psi with Xi_V[psi] = xi/2 + c_xi on U.
// On the support, psi = -(eps(x)/(2 pi^2 S(x))) int (xi(y)-xi(x))/(sigma~(y)(y-x)) dy
// with sigma~ the sign-alternating branch (identical to sigma when one-cut);
// values inside a guard zone around each singular point come from one-sided
// fourth-order extrapolation; off the support, the resolvent form applies.
inline TransportMap invert_master_operator(const TestFunction& xi,
                                           const EquilibriumMeasure& m,
                                           const Potential& V,
                                           const InvertOptions& opt = {}) {
  ConditionsReport rep = check_conditions(xi, m, opt.conditions_tol);
  double norm_xi = detail_op::sup_norm(xi, m);
  double gate = opt.conditions_tol * (1.0 + norm_xi);
  // X2 guards the critical cases; the multi-cut X1 guard is enforced against
  // the analytic branch, which is the version the inversion formula needs.
  for (const auto& v : rep.x2)
    for (double r : v)
      if (std::abs(r) >= gate)
        throw Error(ErrorCode::admissibility,
                    "test function violates the (X2) conditions");
  for (double r : rep.x1_signed)
    if (std::abs(r) >= gate)
      throw Error(ErrorCode::admissibility,
                  "test function violates the multi-cut (X1) conditions");

  auto xi0 = [&](double y) { return xi(y, 0); };
  auto xi1 = [&](double y) { return xi(y, 1); };

  // --- psi on each support interval ------------------------------------------
  std::vector<TransportMap::Piece> pieces;
  std::vector<const EquilibriumMeasure::Part*> parts;
  for (const auto& p : m.parts()) parts.push_back(&p);
  for (size_t l = 0; l < parts.size(); ++l) {
    const auto& grid = parts[l]->grid;
    double eps_l = m.interval_sign(static_cast<int>(l));
    double guard = opt.singular_guard_fraction * (grid.b - grid.a);
    std::vector<double> vals(grid.n);
    std::vector<char> bad(grid.n, 0);
    for (int j = 0; j < grid.n; ++j) {
      double x = grid.x[j];
      for (const auto& sp : m.singular_points())
        if (std::abs(x - sp.position) < guard) bad[j] = 1;
      if (bad[j]) continue;
      double I = m.pv_inv_sigma(xi0, xi1, x);
      vals[j] = -eps_l * I / (2.0 * M_PI * M_PI * m.S(x));
    }
    // fill guarded nodes by one-sided extrapolation from the stable side
    for (int j = 0; j < grid.n; ++j) {
      if (!bad[j]) continue;
      double x = grid.x[j];
      // nodes are ordered by descending x; search outward on each side
      std::vector<double> xs, ys;
      for (int step = 1; step < grid.n && xs.size() < 5; ++step) {
        int cand = (x >= detail_op::nearest_singular(m, x)) ? j - step : j + step;
        if (cand < 0 || cand >= grid.n) break;
        if (!bad[cand]) {
          xs.push_back(grid.x[cand]);
          ys.push_back(vals[cand]);
        }
      }
      if (xs.size() < 5) {  // fall back to any stable nodes
        xs.clear();
        ys.clear();
        for (int c = 0; c < grid.n && xs.size() < 5; ++c)
          if (!bad[c]) {
            xs.push_back(grid.x[c]);
            ys.push_back(vals[c]);
          }
      }
      vals[j] = detail_op::extrapolate4(xs, ys, x);
    }
    TransportMap::Piece piece;
    piece.iv = {grid.a, grid.b};
    piece.s = cheb::interpolate(grid, vals);
    piece.ds = piece.s.derivative();
    piece.d2s = piece.ds.derivative();
    piece.d3s = piece.d2s.derivative();
    pieces.push_back(std::move(piece));
  }

  // c_xi at the midpoint of the widest interval
  const Interval* widest = &m.support()[0];
  for (const auto& iv : m.support())
    if (iv.width() > widest->width()) widest = &iv;
  size_t widx = widest - &m.support()[0];
  auto psi_on = [&](double x) {
    for (size_t l = 0; l < pieces.size(); ++l)
      if (x >= pieces[l].iv.lo && x <= pieces[l].iv.hi) return pieces[l].s.eval(x);
    return pieces[widx].s.eval(x);
  };
  auto dpsi_on = [&](double x) {
    for (size_t l = 0; l < pieces.size(); ++l)
      if (x >= pieces[l].iv.lo && x <= pieces[l].iv.hi) return pieces[l].ds.eval(x);
    return pieces[widx].ds.eval(x);
  };
  double x0 = widest->mid();
  double c_xi = apply_master_operator(m, V, psi_on, dpsi_on, x0) - 0.5 * xi(x0, 0);

  // constancy of Xi[psi] - xi/2 across the interior grid certifies inversion
  double worst = 0.0;
  for (const auto& p : m.parts()) {
    for (int j = 0; j < p.grid.n; ++j) {
      if (std::abs(std::cos(p.grid.theta[j])) > 0.985) continue;
      double x = p.grid.x[j];
      double r = apply_master_operator(m, V, psi_on, dpsi_on, x) -
                 0.5 * xi(x, 0) - c_xi;
      worst = std::max(worst, std::abs(r));
    }
  }
  if (worst > opt.roundtrip_tol * (1.0 + norm_xi))
    throw Error(ErrorCode::admissibility,
                "master operator inversion failed: Xi[psi]-xi/2 is not constant "
                "(deviation " + std::to_string(worst) + "); the test function "
                "is not in the operator's image");

  // --- psi off the support within U --------------------------------------------
  // psi_out = (int psi dmu/(x-y) + xi/2 + c_xi) / (G(x) - V'(x)/2); the
  // denominator vanishes somewhere inside every gap, so margins stop short.
  std::vector<std::vector<double>> qcoef;  // T-coefficients of psi * P per part
  for (size_t l = 0; l < parts.size(); ++l) {
    const auto& grid = parts[l]->grid;
    std::vector<double> prod(grid.n);
    for (int j = 0; j < grid.n; ++j) {
      double P = grid.half() * parts[l]->rho[j] * std::sin(grid.theta[j]);
      prod[j] = pieces[l].s.eval(grid.x[j]) * P;
    }
    qcoef.push_back(cheb::dct(grid.theta, prod));
  }
  auto psi_mu_integral = [&](double x) {
    double acc = 0.0;
    for (size_t l = 0; l < parts.size(); ++l) {
      const auto& grid = parts[l]->grid;
      double v = (x - grid.mid()) / grid.half();
      acc += cheb::sum_cauchy_kernel(qcoef[l], v) / grid.half();
    }
    return acc;
  };
  auto denom = [&](double x) { return m.pv_kernel(x) - 0.5 * V(x, 1); };
  auto psi_out = [&](double x) {
    return (psi_mu_integral(x) + 0.5 * xi(x, 0) + c_xi) / denom(x);
  };

  auto clip_margin = [&](double edge, int dir, double want) {
    // the denominator equals -zeta' and crosses zero inside every gap;
    // stop the margin well before the first sign change
    double first = denom(edge + dir * want / 64.0);
    double len = want;
    for (int i = 2; i <= 64; ++i) {
      double x = edge + dir * want * i / 64.0;
      double d = denom(x);
      if (d * first < 0.0 || d == 0.0) {
        len = want * (i - 1) / 64.0 * 0.8;
        break;
      }
    }
    return len;
  };

  std::vector<TransportMap::Piece> off_pieces;
  const auto& sup = m.support();
  for (size_t l = 0; l < sup.size(); ++l) {
    double w = sup[l].width();
    double left_room = (l == 0) ? opt.u_margin_fraction * w
                                : 0.45 * (sup[l].lo - sup[l - 1].hi);
    double right_room = (l + 1 == sup.size())
                            ? opt.u_margin_fraction * w
                            : 0.45 * (sup[l + 1].lo - sup[l].hi);
    double lm = clip_margin(sup[l].lo, -1, std::min(left_room, opt.u_margin_fraction * w));
    double rm = clip_margin(sup[l].hi, +1, std::min(right_room, opt.u_margin_fraction * w));
    if (lm < 1e-4 * w || rm < 1e-4 * w)
      throw Error(ErrorCode::domain,
                  "inversion neighborhood collapsed: resolvent denominator "
                  "vanishes at the support edge");
    // The 0/0 in the resolvent form materializes only at the edge itself;
    // first-kind nodes stay strictly interior, where both numerator and
    // denominator are already O(sqrt(dist)) with far smaller absolute error.
    off_pieces.push_back(
        TransportMap::make_piece({sup[l].lo - lm, sup[l].lo}, psi_out, 64));
    off_pieces.push_back(
        TransportMap::make_piece({sup[l].hi, sup[l].hi + rm}, psi_out, 64));
  }
  for (auto& p : off_pieces) pieces.push_back(std::move(p));

  Interval U{pieces.front().iv.lo, pieces.back().iv.hi};
  for (const auto& p : pieces) {
    U.lo = std::min(U.lo, p.iv.lo);
    U.hi = std::max(U.hi, p.iv.hi);
  }
  TransportMap t = TransportMap::from_pieces(std::move(pieces), c_xi, U);
  t.append_blends();
  t.finalize_norms();
  t.set_c_xi_spread(worst);
  return t;
}

struct CLTPrediction {
  double m_xi = 0.0;
  double v_xi = 0.0;
  double v_xi_alt = 0.0;
  ConditionsReport conditions;
};

namespace detail_op {

// iint ((psi(x)-psi(y))/(x-y))^2 dmu(x) dmu(y), diagonal through psi'
inline double kernel_square(const TransportMap& t, const EquilibriumMeasure& m) {
  double cutoff = 1e-7 * m.total_width();
  std::vector<double> px, pd, pw, pxx;
  for (const auto& p : m.parts())
    for (int j = 0; j < p.grid.n; ++j) {
      px.push_back(t.psi(p.grid.x[j]));
      pd.push_back(t.dpsi(p.grid.x[j]));
      pw.push_back(p.mu_w[j]);
      pxx.push_back(p.grid.x[j]);
    }
  double acc = 0.0;
  for (size_t i = 0; i < pxx.size(); ++i) {
    double inner = 0.0;
    for (size_t j = 0; j < pxx.size(); ++j) {
      double d = pxx[i] - pxx[j];
      double q = (std::abs(d) < cutoff) ? pd[i] : (px[i] - px[j]) / d;
      inner += pw[j] * q * q;
    }
    acc += pw[i] * inner;
  }
  return acc;
}

}  // namespace detail_op

// |int xi' psi dmu + iint ((psi(x)-psi(y))/(x-y))^2 dmu dmu + int V'' psi^2 dmu|
inline double variance_identity_gap(const TransportMap& t, const TestFunction& xi,
                                    const EquilibriumMeasure& m,
                                    const Potential& V) {
  double term1 = m.integrate_mu([&](double x) { return xi(x, 1) * t.psi(x); });
  double term3 = m.integrate_mu([&](double x) {
    double p = t.psi(x);
    return V(x, 2) * p * p;
  });
  double term2 = detail_op::kernel_square(t, m);
  return std::abs(term1 + term2 + term3);
}

// Theorem-1 parameters: mean (1 - 2/beta) int psi' dmu and variance
// -(2/beta) int psi xi' dmu, cross-checked against the bilinear form.
inline CLTPrediction predict_clt(const TestFunction& xi, const TransportMap& t,
                                 const EquilibriumMeasure& m, const Potential& V,
                                 double beta) {
  if (!(beta > 0.0)) throw Error(ErrorCode::domain, "beta must be positive");
  CLTPrediction pred;
  pred.conditions = check_conditions(xi, m);
  double int_dpsi = m.integrate_mu([&](double x) { return t.dpsi(x); });
  double int_psi_dxi = m.integrate_mu([&](double x) { return t.psi(x) * xi(x, 1); });
  pred.m_xi = (1.0 - 2.0 / beta) * int_dpsi;
  pred.v_xi = -(2.0 / beta) * int_psi_dxi;

  double dbl = detail_op::kernel_square(t, m);
  double int_v2_psi2 = m.integrate_mu([&](double x) {
    double p = t.psi(x);
    return V(x, 2) * p * p;
  });
  pred.v_xi_alt = (2.0 / beta) * (dbl + int_v2_psi2);
  if (std::abs(pred.v_xi - pred.v_xi_alt) > 1e-5 * (1.0 + std::abs(pred.v_xi)))
    throw Error(ErrorCode::identity_violation,
                "variance forms disagree: v = " + std::to_string(pred.v_xi) +
                    " vs " + std::to_string(pred.v_xi_alt));
  return pred;
}

}  // namespace loggas
