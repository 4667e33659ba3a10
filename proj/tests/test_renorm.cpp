#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "she/error.hpp"
#include "she/kernel.hpp"
#include "she/renorm.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace she;

namespace {

constexpr double pi = std::numbers::pi;

Mollifier pam(double e) {
  Mollifier m;
  m.eps = e;
  m.spacetime = false;
  m.d = 3;
  return m;
}

Mollifier she1(double e) {
  Mollifier m;
  m.eps = e;
  m.spacetime = true;
  m.d = 1;
  return m;
}

// Draws u from the unit bump by rejection.
struct BumpSampler {
  Mollifier m;
  std::uniform_real_distribution<double> u{-1.0, 1.0}, v{0.0, 1.0};
  double top;
  explicit BumpSampler(const Mollifier& mo) : m(mo), top(mo.bump(0.0)) {}
  double operator()(std::mt19937_64& rng) {
    for (;;) {
      const double x = u(rng);
      if (v(rng) * top <= m.bump(x)) return x;
    }
  }
};

struct Mean {
  double value, se;
};

// c_eps = E G(Z - Z') with Z, Z' independent draws from rho_eps.
Mean mc_c_eps(const Mollifier& m, const GreenFn& G, std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  BumpSampler b(m);
  const int dims = m.spacetime ? m.d + 1 : m.d;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z[4];
    for (int a = 0; a < dims; ++a) {
      const double scale = m.spacetime && a == 0 ? m.eps * m.eps : m.eps;
      z[a] = scale * (b(rng) - b(rng));
    }
    const double g = G(z);
    s += g;
    s2 += g * g;
  }
  const double mean = s / double(n);
  return {mean, std::sqrt((s2 / double(n) - mean * mean) / double(n - 1))};
}

}  // namespace

TEST_CASE("Green functions") {
  const auto G = GreenFn::pam3d(1.0);
  const double a[3] = {0.1, 0.0, 0.0}, b[3] = {0.0, 0.9, 0.9};
  CHECK(G(a) == doctest::Approx(1.0 / (4.0 * pi * 0.1)).epsilon(1e-14));
  CHECK(G(b) == 0.0);
  const auto H = GreenFn::she1d();
  const double z[2] = {0.2, 0.3}, w[2] = {-0.2, 0.3};
  CHECK(H(z) == doctest::Approx(heat_kernel(0.2, &z[1], 1)).epsilon(1e-14));
  CHECK(H(w) == 0.0);
  CHECK_THROWS_AS(GreenFn::pam3d(0.0), Error);
}

TEST_CASE("PAM3d c_eps against Monte Carlo") {
  const auto G = GreenFn::pam3d(2.0);
  const auto m = pam(0.1);
  const double c = c_eps(m, G);
  const auto mc = mc_c_eps(m, G, 400000, 1);
  CAPTURE(c);
  CAPTURE(mc.value);
  CAPTURE(mc.se);
  CHECK(std::abs(c - mc.value) <= 4.0 * mc.se);
}

TEST_CASE("SHE1d c_eps against Monte Carlo") {
  const auto G = GreenFn::she1d();
  const auto m = she1(0.1);
  const double c = c_eps(m, G);
  const auto mc = mc_c_eps(m, G, 400000, 2);
  CAPTURE(c);
  CAPTURE(mc.value);
  CAPTURE(mc.se);
  CHECK(std::abs(c - mc.value) <= 4.0 * mc.se);
}

TEST_CASE("c_eps scales like 1/eps") {
  const auto G = GreenFn::pam3d(2.0);
  const double a = c_eps(pam(0.2), G) * 0.2, b = c_eps(pam(0.05), G) * 0.05;
  CHECK(a == doctest::Approx(b).epsilon(1e-5));
  const auto H = GreenFn::she1d();
  CHECK(c_eps(she1(0.2), H) * 0.2 == doctest::Approx(c_eps(she1(0.05), H) * 0.05).epsilon(1e-5));
}

TEST_CASE("a custom kernel matches the built-in one") {
  const auto H = GreenFn::she1d();
  const auto C = GreenFn::custom(1, true, [](const double* z) { return heat_kernel(z[0], &z[1], 1); });
  CHECK(c_eps(she1(0.1), C) == doctest::Approx(c_eps(she1(0.1), H)).epsilon(1e-6));
}

TEST_CASE("rqmc integrates a smooth product") {
  auto f = [](const double* u) {
    double p = 1.0;
    for (int i = 0; i < 5; ++i) p *= 0.5 * pi * std::sin(pi * u[i]);
    return p;
  };
  // Standard error against n on 2^8..2^18 decays faster than n^{-3/4}.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int m = 8; m <= 18; m += 2, ++cnt) {
    const auto e = rqmc(5, std::size_t(1) << m, 16, 3, f);
    CHECK(std::abs(e.value - 1.0) <= 4.0 * e.stderr_ + 1e-12);
    const double x = m * std::log(2.0), y = std::log(e.stderr_);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  CHECK(slope <= -0.75);
  const auto a = rqmc(5, 1 << 10, 16, 3, f), again = rqmc(5, 1 << 10, 16, 3, f);
  CHECK(again.value == a.value);
  CHECK_THROWS_AS(rqmc(5, 16, 1, 3, f), Error);
}

TEST_CASE("renormalisation constant is the sum of its parts") {
  const auto m = she1(0.1);
  QmcOptions o;
  o.samples = 1 << 12;
  o.max_samples = 1 << 12;
  o.rel_tol = 1.0;
  o.abs_tol = 1.0;
  const auto rc = renorm_constants(m, GreenFn::she1d(), o);
  CHECK(rc.C == doctest::Approx(rc.c + rc.c11.value + rc.c12.value.value).epsilon(1e-14));
  CHECK(rc.c12.value.value == doctest::Approx(rc.c12.five.value - rc.c12.delta.value).epsilon(1e-12));
}

TEST_CASE("SHE1d c11 does not depend on eps") {
  const auto G = GreenFn::she1d();
  const auto a = c11_eps(she1(0.2), G), b = c11_eps(she1(0.05), G);
  CHECK(std::abs(a.value - b.value) <= 4.0 * std::hypot(a.stderr_, b.stderr_));
}

TEST_CASE("renorm validation") {
  CHECK_THROWS_AS(c_eps(pam(0.3), GreenFn::pam3d(2.0)), Error);
  CHECK_THROWS_AS(c_eps(she1(0.1), GreenFn::pam3d(2.0)), Error);
  auto m = she1(0.1);
  m.skew = 1.0;
  CHECK_THROWS_AS(c_eps(m, GreenFn::she1d()), Error);
}
