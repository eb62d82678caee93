#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "loggas/potential.hpp"

using namespace loggas;

TEST_CASE("catalog potentials evaluate their closed forms") {
  Potential g = catalog("gaussian");
  CHECK(g(0.0, 0) == 0.0);
  CHECK(g(3.0, 0) == Catch::Approx(4.5));
  CHECK(g(1.5, 1) == Catch::Approx(1.5));
  CHECK(g(1.5, 2) == Catch::Approx(1.0));

  Potential b = catalog("bulk_critical_quartic");
  CHECK(b(0.0, 0) == 0.0);
  CHECK(b(2.0, 0) == Catch::Approx(0.0).margin(1e-14));
  CHECK(b(1.0, 1) == Catch::Approx(1.0 - 2.0));

  Potential e = catalog("edge_critical_quartic");
  CHECK(e(2.0, 0) == Catch::Approx(8.0 / 3.0));  // (1/20)16-(4/15)8+(1/5)4+(8/5)2

  Potential t = catalog("two_cut_quartic(1.5)");
  CHECK(t(1.0, 0) == Catch::Approx(0.25 - 1.5));
  CHECK_THROWS_AS(catalog("two_cut_quartic(0.5)"), Error);
  CHECK_THROWS_AS(catalog("does_not_exist"), Error);
}

TEST_CASE("derivative order above declared regularity is an error") {
  Potential g = catalog("gaussian");
  CHECK_THROWS_AS(g(0.0, 65), Error);
}

TEST_CASE("derivatives agree with finite differences on a grid") {
  for (const char* name :
       {"gaussian", "bulk_critical_quartic", "edge_critical_quartic",
        "two_cut_quartic(1.5)"}) {
    Potential V = catalog(name);
    double h = 1e-5;
    for (int i = 0; i < 100; ++i) {
      double x = -2.5 + 5.0 * i / 99.0;
      double fd1 = (V(x + h, 0) - V(x - h, 0)) / (2 * h);
      CHECK(V(x, 1) == Catch::Approx(fd1).epsilon(1e-8).margin(1e-9));
      for (int k = 2; k <= 3; ++k) {
        double fdk = (V(x + h, k - 1) - V(x - h, k - 1)) / (2 * h);
        CHECK(V(x, k) == Catch::Approx(fdk).epsilon(1e-6).margin(1e-7));
      }
    }
  }
}

TEST_CASE("growth check") {
  SECTION("every catalog entry passes") {
    for (const char* name :
         {"gaussian", "bulk_critical_quartic", "edge_critical_quartic",
          "two_cut_quartic(1.5)"}) {
      Potential V = catalog(name);
      GrowthReport rep = check_growth(V, 100.0);
      CHECK(rep.passes);
    }
  }
  SECTION("log(1+x^2) grows too slowly") {
    Potential slow(
        "log_potential",
        [](double x, int k) {
          if (k == 0) return std::log(1.0 + x * x);
          if (k == 1) return 2.0 * x / (1.0 + x * x);
          return (2.0 - 2.0 * x * x) / ((1.0 + x * x) * (1.0 + x * x));
        },
        2, {-2.0, 2.0});
    GrowthReport rep = check_growth(slow, 100.0);
    CHECK_FALSE(rep.passes);
    CHECK(rep.liminf_estimate < 1.01);  // ratio tends to 1 from above
  }
  SECTION("probe radius precondition") {
    CHECK_THROWS_AS(check_growth(catalog("gaussian"), 10.0), Error);
  }
}

TEST_CASE("potential from samples reproduces a smooth field") {
  std::vector<double> xs, vs;
  for (int i = 0; i < 400; ++i) {
    double x = -3.0 + 6.0 * i / 399.0;
    xs.push_back(x);
    vs.push_back(x * x / 2 + 0.1 * x * x * x * x);
  }
  Potential u = potential_from_samples(xs, vs);
  CHECK(u(1.3, 0) == Catch::Approx(1.3 * 1.3 / 2 + 0.1 * std::pow(1.3, 4)).epsilon(1e-9));
  CHECK(u(0.7, 1) == Catch::Approx(0.7 + 0.4 * std::pow(0.7, 3)).epsilon(1e-7));
  double h = 1e-4;
  double fd2 = (u(0.5 + h, 1) - u(0.5 - h, 1)) / (2 * h);
  CHECK(u(0.5, 2) == Catch::Approx(fd2).epsilon(1e-6));
}
