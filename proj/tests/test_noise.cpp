#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "she/error.hpp"
#include "she/noise.hpp"
#include "she/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace she;

namespace {

Grid line(std::size_t N, double L = 1.0) {
  Grid g;
  g.d = 1;
  g.L = L;
  g.N = N;
  return g;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / (std::string("she_test_") + name)).string();
}

}  // namespace

TEST_CASE("Philox4x32-10 known answers") {
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == Philox4x32{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        Philox4x32{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        Philox4x32{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("white noise cell statistics") {
  Grid g = line(1 << 16, 2.0);
  const auto f = sample_white_noise(g, FieldKind::spatial, 42);
  double s = 0.0, s2 = 0.0;
  for (double v : f.values) s += v, s2 += v * v;
  const double n = double(f.values.size()), var = 1.0 / g.dx();
  CHECK(std::abs(s / n) < 4.0 * std::sqrt(var / n));
  CHECK(std::abs(s2 / n / var - 1.0) < 4.0 * std::sqrt(2.0 / n));

  Grid st = line(256);
  st.M = 256;
  st.T = 0.25;
  const auto w = sample_white_noise(st, FieldKind::spacetime, 42);
  s2 = 0.0;
  for (double v : w.values) s2 += v * v;
  CHECK(std::abs(s2 / double(w.values.size()) * st.dx() * st.dt() - 1.0) < 4.0 * std::sqrt(2.0 / double(w.values.size())));
}

TEST_CASE("white noise is a function of the seed") {
  const Grid g = line(1024);
  const auto a = sample_white_noise(g, FieldKind::spatial, 7), b = sample_white_noise(g, FieldKind::spatial, 7);
  const auto c = sample_white_noise(g, FieldKind::spatial, 8);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK_THROWS_AS(sample_white_noise(g, FieldKind::spacetime, 1), Error);
}

TEST_CASE("bump density") {
  for (double s : {0.5, 1.0, 2.0}) {
    Mollifier m;
    m.sharpness = s;
    double mass = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) mass += m.bump(-1.0 + 2.0 * (i + 0.5) / n) * 2.0 / n;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.bump_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(m.bump_cdf(-1.0) == 0.0);
    CHECK(m.bump_cdf(1.0) == 1.0);
    CHECK(m.bump(1.0) == 0.0);
    m.skew = 0.4;
    double tilted = 0.0;
    for (int i = 0; i < n; ++i) tilted += m.space_bump(-1.0 + 2.0 * (i + 0.5) / n) * 2.0 / n;
    CHECK(tilted == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("mollifying a spike reproduces the sampled kernel") {
  for (bool reflect : {false, true}) {
    const Grid g = line(512);
    Field spike(g, FieldKind::spatial);
    spike.values[0] = 1.0;
    Mollifier m;
    m.eps = 0.05;
    m.spacetime = false;
    m.d = 1;
    m.skew = 0.3;
    m.reflect = reflect;
    const auto out = mollify(spike, m);
    std::vector<double> ref(g.N);
    double s = 0.0;
    for (std::size_t i = 0; i < g.N; ++i) {
      const double x = (i <= g.N / 2 ? double(i) : double(i) - double(g.N)) * g.dx();
      ref[i] = m.rho(&x);
      s += ref[i];
    }
    double total = 0.0;
    for (std::size_t i = 0; i < g.N; ++i) {
      CHECK(out.values[i] == doctest::Approx(ref[i] / s).epsilon(1e-12).scale(1e-3));
      total += out.values[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("mollify preserves constants and validates resolution") {
  Grid g = line(128);
  g.M = 64;
  g.T = 0.25;
  Field c(g, FieldKind::spacetime);
  for (double& v : c.values) v = 2.5;
  Mollifier m;
  m.eps = 0.1;
  const auto out = mollify(c, m);
  for (double v : out.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
  m.eps = 0.01;
  try {
    mollify(c, m);
    FAIL("expected a validation error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::validation);
    CHECK(std::string(e.what()).find("2*dx") != std::string::npos);
  }
  m.eps = 0.1;
  m.spacetime = false;
  CHECK_THROWS_AS(mollify(c, m), Error);
}

TEST_CASE("spatial white noise has exponent -d/2") {
  const auto b = build_basis(1);
  std::vector<Field> fields;
  for (std::uint64_t s = 0; s < 4; ++s) fields.push_back(sample_white_noise(line(1 << 14), FieldKind::spatial, 50 + s));
  const auto est = estimate_regularity(fields, 2.0, b, 3, 9);
  CHECK(est.alpha_hat == doctest::Approx(-0.5).epsilon(0.1));
  CHECK(est.ci_lo <= est.alpha_hat);
  CHECK(est.alpha_hat <= est.ci_hi);
}

TEST_CASE("bootstrap summary") {
  const std::vector<double> v = {-1.52, -1.48, -1.50, -1.55, -1.47, -1.49};
  const auto a = summarize_regularity(v, 3), b = summarize_regularity(v, 3);
  CHECK(a.alpha_hat == doctest::Approx(-1.50166666666667).epsilon(1e-12));
  CHECK(a.ci_lo == b.ci_lo);
  CHECK(a.ci_hi == b.ci_hi);
  CHECK(a.ci_lo >= -1.55);
  CHECK(a.ci_hi <= -1.47);
  CHECK(a.ci_lo < a.alpha_hat);
  CHECK(a.alpha_hat < a.ci_hi);
  CHECK_THROWS_AS(summarize_regularity({}), Error);
}

TEST_CASE("field file round trip and layout") {
  Grid g = line(32, 2.0);
  g.M = 4;
  g.T = 0.5;
  Field f = sample_white_noise(g, FieldKind::spacetime, 3);
  const auto path = temp_path("rt.shef");
  write_field(path, f);
  CHECK(std::filesystem::file_size(path) == 42 + 8 * f.values.size());
  {
    std::ifstream is(path, std::ios::binary);
    char magic[4];
    is.read(magic, 4);
    CHECK(std::string(magic, 4) == "SHEF");
  }
  const auto r = read_field(path);
  CHECK(r.grid == f.grid);
  CHECK(r.kind == f.kind);
  CHECK(r.values == f.values);
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  try {
    read_field(path);
    FAIL("expected an io error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::io);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_field(path), Error);
}
