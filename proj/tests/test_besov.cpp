#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "she/besov.hpp"
#include "she/error.hpp"
#include "she/noise.hpp"

#include <cmath>
#include <random>
#include <set>
#include <string>

using namespace she;

namespace {

Field gaussian_field(const Grid& g, unsigned seed) {
  Field f(g, FieldKind::spatial);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  for (double& v : f.values) v = n(rng);
  return f;
}

Field combine(const Field& a, double s, const Field& b, double t) {
  Field out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = s * a.values[i] + t * b.values[i];
  return out;
}

}  // namespace

TEST_CASE("weight families") {
  const auto p = WeightFamily::polynomial(1.5);
  CHECK(p(0.0, 3.0) == doctest::Approx(std::pow(4.0, 1.5)));
  CHECK(p.log_value(0.0, 3.0) == doctest::Approx(1.5 * std::log(4.0)));
  const auto e = WeightFamily::exponential(0.5);
  CHECK(e(0.0, 1.0) == doctest::Approx(std::exp(1.0)));
  CHECK(WeightFamily::none()(1.0, 5.0) == 1.0);
}

TEST_CASE("admissible weights pass the comparability check") {
  CHECK(check_weight(WeightFamily::polynomial(2.0), 50.0).ok);
  CHECK(check_weight(WeightFamily::polynomial(-1.0), 50.0).ok);
  const auto e = check_weight(WeightFamily::exponential(1.0), 50.0);
  CHECK(e.ok);
  CHECK(e.C_est == doctest::Approx(std::exp(1.0)).epsilon(1e-3));
  const auto gauss = WeightFamily::custom([](double, double r, double) { return std::exp(r * r); });
  CHECK_FALSE(check_weight(gauss, 50.0).ok);
}

TEST_CASE("besov norm is a norm") {
  const auto b = build_basis(2);
  Grid g;
  g.d = 1;
  g.N = 512;
  const BesovParams bp{-0.5, 2.0, 2};
  for (unsigned s = 0; s < 5; ++s) {
    const Field f = gaussian_field(g, 10 + s), h = gaussian_field(g, 20 + s);
    const auto nf = besov_norm(analyze(f, b, 1, 6), bp);
    const auto nh = besov_norm(analyze(h, b, 1, 6), bp);
    const auto ns = besov_norm(analyze(combine(f, -3.0, h, 0.0), b, 1, 6), bp);
    CHECK(ns == doctest::Approx(3.0 * nf).epsilon(1e-12));
    const auto nsum = besov_norm(analyze(combine(f, 1.0, h, 1.0), b, 1, 6), bp);
    CHECK(nsum <= nf + nh + 1e-12);
    const auto ninf = besov_norm(analyze(f, b, 1, 6), {-0.5, kInf, 2});
    CHECK(std::isfinite(ninf));
    CHECK(ninf > 0.0);
  }
}

TEST_CASE("weights at least one do not increase the norm") {
  const auto b = build_basis(1);
  Grid g;
  g.d = 1;
  g.L = 8.0;
  g.N = 1024;
  const Field f = gaussian_field(g, 3);
  const auto pyr = analyze(f, b, 0, 5);
  const BesovParams bp{-1.0, 2.0, 1};
  const double plain = besov_norm(pyr, bp);
  CHECK(besov_norm(pyr, bp, WeightFamily::polynomial(1.0), &g) <= plain);
  CHECK(besov_norm(pyr, bp, WeightFamily::exponential(0.5), &g) <= plain);
  CHECK_THROWS_AS(besov_norm(pyr, bp, WeightFamily::polynomial(1.0)), Error);
  CHECK_THROWS_AS(besov_norm(pyr, {-1.0, 0.5, 1}), Error);
}

TEST_CASE("dirac membership threshold") {
  CHECK(dirac_membership(1, 1.0, -0.1));
  CHECK_FALSE(dirac_membership(1, 1.0, 0.1));
  CHECK(dirac_membership(3, 2.0, -1.6));
  CHECK_FALSE(dirac_membership(3, 2.0, -1.4));
  CHECK(dirac_membership(2, kInf, -2.1));
  CHECK_FALSE(dirac_membership(2, kInf, -1.9));
  // Grid Dirac norms agree with the threshold, d = 1, p = 2, edge -1/2.
  const auto b = build_basis(2);
  CHECK(dirac_besov_norms(1, 2.0, -0.75, b, {9, 10, 11}).bounded);
  CHECK_FALSE(dirac_besov_norms(1, 2.0, -0.25, b, {9, 10, 11}).bounded);
}

TEST_CASE("assumption W readings") {
  const auto ext = check_assumption_W(0.025, 0.1, 1.0, 1.0, 1, W5Reading::extend_by_equality);
  std::set<std::string> names;
  for (const auto& row : ext) {
    CAPTURE(row.condition);
    CHECK(row.pass);
    CHECK(row.interpretation == "extend_by_equality");
    names.insert(row.condition);
  }
  CHECK(names == std::set<std::string>{"W-0", "increasing_in_time", "W-1", "W-2", "W-3", "W-4", "W-5"});
  bool w5_failed = false;
  for (const auto& row : check_assumption_W(0.025, 0.1, 1.0, 1.0, 1, W5Reading::strict)) {
    CAPTURE(row.condition);
    if (row.condition == "W-5") w5_failed = w5_failed || !row.pass;
    else CHECK(row.pass);
  }
  CHECK(w5_failed);
  CHECK_THROWS_AS(check_assumption_W(0.0, 0.1, 1.0, 1.0, 1), Error);
}
