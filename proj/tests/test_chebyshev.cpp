#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loggas/chebyshev.hpp"
#include "oracles.hpp"

using namespace loggas;

TEST_CASE("interpolation and derivatives") {
  auto g = cheb::Grid::make(-1.5, 2.5, 48);
  std::vector<double> vals(g.n);
  for (int j = 0; j < g.n; ++j) vals[j] = std::exp(g.x[j]) * std::sin(g.x[j]);
  cheb::Series s = cheb::interpolate(g, vals);
  cheb::Series ds = s.derivative();
  for (double x : {-1.2, 0.0, 0.9, 2.2}) {
    CHECK(s.eval(x) == Catch::Approx(std::exp(x) * std::sin(x)).epsilon(1e-12).margin(1e-13));
    CHECK(ds.eval(x) ==
          Catch::Approx(std::exp(x) * (std::sin(x) + std::cos(x))).epsilon(1e-10));
  }
}

// oracle-frozen values for the closed-form kernels
TEST_CASE("log kernel sum against brute-force quadrature") {
  // a test vector of coefficients, no structure
  std::vector<double> p = {0.7, -0.3, 0.11, 0.05, -0.02, 0.013};
  auto f = [&](double u) {
    double acc = 0.0, t0 = 1.0, t1 = u;
    for (size_t k = 0; k < p.size(); ++k) {
      double tk = (k == 0) ? 1.0 : (k == 1 ? u : 2 * u * t1 - t0);
      if (k >= 2) {
        t0 = t1;
        t1 = tk;
      }
      acc += p[k] * tk;
    }
    return acc;
  };
  for (double v : {0.37, -0.81, 1.25, -3.7, 1.002}) {
    double ref = oracle::simpson(
        [&](double th) { return std::log(std::abs(v - std::cos(th))) * f(std::cos(th)); },
        0.0, M_PI, 400001);
    CHECK(cheb::sum_log_kernel(p, v) == Catch::Approx(ref).margin(2e-8));
  }
}

TEST_CASE("cauchy kernel sum against brute-force principal value") {
  std::vector<double> p = {0.0, 0.45, -0.2, 0.08, 0.03};  // P(+-1)=0 not needed inside
  auto f = [&](double u) {
    double acc = 0.0, t0 = 1.0, t1 = u;
    for (size_t k = 0; k < p.size(); ++k) {
      double tk = (k == 0) ? 1.0 : (k == 1 ? u : 2 * u * t1 - t0);
      if (k >= 2) {
        t0 = t1;
        t1 = tk;
      }
      acc += p[k] * tk;
    }
    return acc;
  };
  SECTION("inside the cut") {
    // substitute u = cos(theta); the PV stays a PV in theta
    for (double v : {0.3, -0.66}) {
      double thv = std::acos(v);
      auto G = [&](double th) {
        return f(std::cos(th)) * (thv - th) / (v - std::cos(th));
      };
      double ref = -oracle::pv_integral(G, 0.0, M_PI, thv);
      CHECK(cheb::sum_cauchy_kernel(p, v) == Catch::Approx(ref).margin(1e-7));
    }
  }
  SECTION("outside the cut") {
    for (double v : {1.4, -2.2}) {
      double ref = oracle::simpson(
          [&](double th) { return f(std::cos(th)) / (v - std::cos(th)); }, 0.0,
          M_PI, 200001);
      CHECK(cheb::sum_cauchy_kernel(p, v) == Catch::Approx(ref).margin(1e-10));
    }
  }
}

TEST_CASE("log edge sum") {
  std::vector<double> p = {1.0, 0.2, -0.4, 0.1, 0.25};
  // log(1-u^2) = 2 log(sin theta) under u = cos(theta)
  double ref = oracle::simpson(
      [&](double th) {
        double u = std::cos(th);
        double acc = p[0] + p[1] * u + p[2] * (2 * u * u - 1) +
                     p[3] * (4 * u * u * u - 3 * u) +
                     p[4] * (8 * u * u * u * u - 8 * u * u + 1);
        return acc * 2.0 * std::log(std::sin(th));
      },
      1e-7, M_PI - 1e-7, 2000001);
  CHECK(cheb::sum_log_edge(p) == Catch::Approx(ref).margin(1e-6));
}
