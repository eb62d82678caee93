#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "loggas/solver.hpp"

using namespace loggas;

namespace {

double exact_density(const std::string& name, double x) {
  double edge = std::max(4.0 - x * x, 0.0);
  if (name == "gaussian") return std::sqrt(edge) / (2.0 * M_PI);
  if (name == "bulk_critical_quartic")
    return x * x * std::sqrt(edge) / (2.0 * M_PI);
  if (name == "edge_critical_quartic")
    return (x - 2.0) * (x - 2.0) * std::sqrt(edge) / (10.0 * M_PI);
  return 0.0;
}

double l1_distance(const EquilibriumMeasure& m, const std::string& name,
                   const SolveDiagnostics& diag) {
  double dx = diag.grid_x[1] - diag.grid_x[0];
  double acc = 0.0;
  for (double x : diag.grid_x)
    acc += std::abs(m.density(x) - exact_density(name, x)) * dx;
  return acc;
}

}  // namespace

TEST_CASE("solver reproduces the semicircle at working resolution") {
  SolveOptions opt;
  opt.window = {-3.0, 3.0};
  opt.nodes = 1024;
  SolveDiagnostics diag;
  EquilibriumMeasure m = solve_equilibrium(catalog("gaussian"), opt, &diag);
  CHECK(diag.stationarity < 1e-8);
  REQUIRE(m.support().size() == 1);
  CHECK(m.support()[0].lo == Catch::Approx(-2.0).margin(2e-3));
  CHECK(m.support()[0].hi == Catch::Approx(2.0).margin(2e-3));
  CHECK(m.mass() == Catch::Approx(1.0).margin(1e-8));
  CHECK(m.c_V() == Catch::Approx(0.5).margin(1e-4));
  CHECK(l1_distance(m, "gaussian", diag) < 1e-3);
  CHECK(m.singular_points().empty());
  for (const auto& p : m.parts())
    for (double r : p.rho) CHECK(r >= 0.0);
}

TEST_CASE("solver finds the bulk singular point") {
  SolveOptions opt;
  opt.window = {-3.0, 3.0};
  opt.nodes = 2048;
  SolveDiagnostics diag;
  EquilibriumMeasure m =
      solve_equilibrium(catalog("bulk_critical_quartic"), opt, &diag);
  REQUIRE(m.support().size() == 1);
  REQUIRE(m.singular_points().size() == 1);
  CHECK(m.singular_points()[0].position == Catch::Approx(0.0).margin(1e-3));
  CHECK(m.singular_points()[0].order == 1);
  CHECK(l1_distance(m, "bulk_critical_quartic", diag) < 1e-3);
}

TEST_CASE("solver detects edge criticality") {
  SolveOptions opt;
  opt.window = {-3.5, 3.5};
  opt.nodes = 2048;
  SolveDiagnostics diag;
  EquilibriumMeasure m =
      solve_equilibrium(catalog("edge_critical_quartic"), opt, &diag);
  REQUIRE(m.support().size() == 1);
  REQUIRE(m.singular_points().size() == 1);
  CHECK(m.singular_points()[0].order == 1);
  CHECK(m.singular_points()[0].position ==
        Catch::Approx(m.support()[0].hi).margin(1e-12));
  CHECK(l1_distance(m, "edge_critical_quartic", diag) < 1e-3);
}

TEST_CASE("solver resolves the two-cut support") {
  SolveOptions opt;
  opt.window = {-3.2, 3.2};
  opt.nodes = 1024;
  EquilibriumMeasure m = solve_equilibrium(catalog("two_cut_quartic(1.5)"), opt);
  REQUIRE(m.support().size() == 2);
  CHECK(m.support()[0].lo == Catch::Approx(-std::sqrt(5.0)).margin(5e-3));
  CHECK(m.support()[0].hi == Catch::Approx(-1.0).margin(5e-3));
  CHECK(m.support()[1].lo == Catch::Approx(1.0).margin(5e-3));
  CHECK(m.support()[1].hi == Catch::Approx(std::sqrt(5.0)).margin(5e-3));
}

TEST_CASE("solver error paths") {
  SECTION("window that cuts the support") {
    // domain hint narrower than the true support, so the precondition passes
    // but the detected support runs into the window boundary
    Potential v = Potential::from_polynomial("narrow_hint",
                                             Polynomial({0, 0, 0.5}), {-1.0, 1.0});
    SolveOptions opt;
    opt.window = {-1.8, 1.8};
    opt.nodes = 512;
    try {
      solve_equilibrium(v, opt);
      FAIL("expected window_too_small");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::window_too_small);
    }
  }
  SECTION("too few nodes") {
    SolveOptions opt;
    opt.nodes = 128;
    CHECK_THROWS_AS(solve_equilibrium(catalog("gaussian"), opt), Error);
  }
}
