#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "she/error.hpp"
#include "she/noise.hpp"
#include "she/solver.hpp"

#include <cmath>
#include <numbers>

using namespace she;

namespace {

SolverConfig she_config(double T = 0.1) {
  SolverConfig c;
  c.equation = Equation::she1d;
  c.grid.d = 1;
  c.grid.L = 4.0;
  c.grid.N = 128;
  c.T = T;
  c.dt = 2.5e-4;
  c.eps = 0.125;
  c.seed = 9;
  return c;
}

Field space_field(const SolverConfig& c, double (*f)(double)) {
  Grid g = c.grid;
  g.M = 0;
  g.T = 0.0;
  Field u(g, FieldKind::spatial);
  for (std::size_t i = 0; i < g.N; ++i) u.values[i] = f(double(i) * g.dx());
  return u;
}

double max_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

}  // namespace

TEST_CASE("equation names") {
  for (auto e : {Equation::pam2d, Equation::pam3d, Equation::she1d}) CHECK(parse_equation(to_string(e)) == e);
  CHECK(equation_dim(Equation::pam3d) == 3);
  CHECK(equation_spacetime(Equation::she1d));
  CHECK_FALSE(equation_spacetime(Equation::pam2d));
  CHECK_THROWS_AS(parse_equation("kpz"), Error);
}

TEST_CASE("heat step is exact on Fourier modes") {
  auto c = she_config(0.2);
  c.u0 = InitialCondition::from_field(space_field(c, [](double x) { return std::cos(2.0 * std::numbers::pi * x); }));
  const Field xi = sample_equation_noise(c, 0.0);
  Field zero = xi;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  const auto tr = solve_with_noise(c, zero, 0.0);
  const double decay = std::exp(-4.0 * std::numbers::pi * std::numbers::pi * c.T);
  for (std::size_t i = 0; i < c.grid.N; ++i)
    CHECK(tr.snapshots.back().values[i] ==
          doctest::Approx(decay * c.u0.f.values[i]).epsilon(1e-10).scale(1.0));
  CHECK(tr.diag.back().mass == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("restarting from a snapshot reproduces the uninterrupted run") {
  auto c = she_config(0.1);
  c.u0 = InitialCondition::constant(1.0);
  c.snapshots = {0.05, 0.1};
  const Field xi = smooth_noise(sample_equation_noise(c, c.eps), c, c.eps);
  const auto full = solve_with_noise(c, xi, 1.5);
  auto r = c;
  r.t_start = 0.05;
  r.T = 0.05;
  r.snapshots = {0.05};
  r.u0 = InitialCondition::from_field(full.snapshots[0]);
  const auto rest = solve_with_noise(r, xi, 1.5);
  REQUIRE(rest.snapshots.size() == 1);
  CHECK(rest.times[0] == doctest::Approx(0.1));
  CHECK(max_diff(rest.snapshots[0], full.snapshots[1]) <= 1e-12 * full.diag[1].max);
}

TEST_CASE("solution is linear in the initial data and keeps its sign") {
  auto c = she_config(0.1);
  const Field xi = smooth_noise(sample_equation_noise(c, c.eps), c, c.eps);
  c.u0 = InitialCondition::from_field(space_field(c, [](double x) { return 1.0 + std::sin(x); }));
  const auto a = solve_with_noise(c, xi, 2.0);
  auto c3 = c;
  for (double& v : c3.u0.f.values) v *= 3.0;
  const auto b = solve_with_noise(c3, xi, 2.0);
  Field scaled = a.snapshots[0];
  for (double& v : scaled.values) v *= 3.0;
  CHECK(max_diff(scaled, b.snapshots[0]) <= 1e-12 * b.diag[0].max);
  CHECK(a.diag[0].min > 0.0);
}

TEST_CASE("zero noise conserves mass") {
  auto c = she_config(0.1);
  c.u0 = InitialCondition::dirac();
  Field zero = sample_equation_noise(c, 0.0);
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  const auto tr = solve_with_noise(c, zero, 0.0);
  CHECK(tr.diag.back().mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weighted distance is a metric") {
  auto c = she_config();
  const Field a = space_field(c, [](double x) { return std::sin(x); });
  const Field b = space_field(c, [](double x) { return x; });
  const Field d = space_field(c, [](double x) { return std::exp(-x); });
  for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
    CHECK(weighted_distance(a, a, 0.3, 1.0, p) == 0.0);
    CHECK(weighted_distance(a, b, 0.3, 1.0, p) == doctest::Approx(weighted_distance(b, a, 0.3, 1.0, p)));
    CHECK(weighted_distance(a, d, 0.3, 1.0, p) <=
          weighted_distance(a, b, 0.3, 1.0, p) + weighted_distance(b, d, 0.3, 1.0, p) + 1e-14);
  }
  CHECK(centre_radius(c.grid, c.grid.N / 2) == 0.0);
  CHECK(centre_radius(c.grid, 0) == doctest::Approx(2.0));
}

TEST_CASE("solver validation") {
  auto c = she_config();
  c.eps = 0.05;
  c.grid.L = 4.0;
  c.grid.N = 64;
  c.C_eps = 0.0;
  try {
    solve_renormalised(c);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation);
    CHECK(std::string(e.what()).find("2*dx") != std::string::npos);
  }
  c = she_config();
  c.grid.d = 3;
  CHECK_THROWS_AS(solve_renormalised(c), Error);
  c = she_config();
  c.snapshots = {0.5};
  CHECK_THROWS_AS(solve_renormalised(c), Error);
  c = she_config();
  c.C_eps = -1e5;
  try {
    solve_renormalised(c);
    FAIL("expected a numerical error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::numerical);
  }
}
