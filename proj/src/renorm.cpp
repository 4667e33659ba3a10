#include "she/renorm.hpp"

#include "she/error.hpp"
#include "she/kernel.hpp"
#include "she/parallel.hpp"
#include "she/quadrature.hpp"
#include "she/rng.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace she {

using std::numbers::pi;
using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

// ---------------------------------------------------------------- rho^{*2}

struct RhoSq::Table {
  static constexpr int n = 4001;
  static constexpr double h = 4.0 / (n - 1);
  std::unique_ptr<Spline> spline;
  std::vector<double> cdf;   // cumulative cell masses, size n
  std::vector<double> dens;  // cell-constant density, size n-1

  double operator()(double u) const {
    if (!(std::abs(u) < 2.0)) return 0.0;
    return std::max(0.0, (*spline)(u));
  }
};

namespace {

std::shared_ptr<const RhoSq::Table> make_table(const std::function<double(double)>& b) {
  auto t = std::make_shared<RhoSq::Table>();
  std::vector<double> y(RhoSq::Table::n);
  for (int i = 0; i < RhoSq::Table::n; ++i) {
    const double s = -2.0 + i * RhoSq::Table::h;
    const double lo = std::max(-1.0, s - 1.0), hi = std::min(1.0, s + 1.0);
    double v = 0.0;
    if (hi > lo) {
      const auto q = gauss_legendre(lo, hi, 4);
      for (std::size_t k = 0; k < q.x.size(); ++k) v += q.w[k] * b(q.x[k]) * b(s - q.x[k]);
    }
    y[i] = v;
  }
  t->spline = std::make_unique<Spline>(y.begin(), y.end(), -2.0, RhoSq::Table::h, 0.0, 0.0);
  t->cdf.assign(RhoSq::Table::n, 0.0);
  t->dens.assign(RhoSq::Table::n - 1, 0.0);
  for (int i = 0; i + 1 < RhoSq::Table::n; ++i) {
    const double a = -2.0 + i * RhoSq::Table::h;
    const double mass = RhoSq::Table::h / 6.0 * ((*t)(a) + 4.0 * (*t)(a + 0.5 * RhoSq::Table::h) + (*t)(a + RhoSq::Table::h));
    t->dens[i] = mass / RhoSq::Table::h;
    t->cdf[i + 1] = t->cdf[i] + mass;
  }
  return t;
}

std::shared_ptr<const RhoSq::Table> cached_table(const Mollifier& m, bool space) {
  static std::mutex mu;
  static std::map<std::tuple<double, double, bool, bool>, std::shared_ptr<const RhoSq::Table>> cache;
  const double skew = space ? m.skew : 0.0;
  const bool flip = space && m.reflect;
  const auto key = std::make_tuple(m.sharpness, skew, flip, space);
  std::lock_guard lk(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  Mollifier base = m;
  base.skew = skew;
  auto t = make_table([base, space, flip](double u) {
    const double v = flip ? -u : u;
    return space ? base.space_bump(v) : base.bump(v);
  });
  cache.emplace(key, t);
  return t;
}

}  // namespace

RhoSq::RhoSq(const Mollifier& m) : m_(m) {
  if (!(m.eps > 0.0)) fail_validation("mollifier eps must be positive");
  if (!(std::abs(m.skew) < 1.0)) fail_validation("mollifier skew must lie in (-1, 1)");
  if (m.d < 1 || m.d > 3) fail_validation("mollifier dimension must be 1, 2 or 3");
  if (m.spacetime) time_ = cached_table(m, false);
  space_ = cached_table(m, true);
}

const RhoSq::Table& RhoSq::table(int a) const { return (m_.spacetime && a == 0) ? *time_ : *space_; }

double RhoSq::scale(int a) const { return (m_.spacetime && a == 0) ? m_.eps * m_.eps : m_.eps; }

double RhoSq::axis(int a, double u) const { return table(a)(u); }

double RhoSq::operator()(const double* z) const {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) {
    const double s = scale(a);
    v *= table(a)(z[a] / s) / s;
    if (v == 0.0) return 0.0;
  }
  return v;
}

double RhoSq::total_mass() const {
  double v = 1.0;
  for (int a = 0; a < dims(); ++a) v *= table(a).cdf.back();
  return v;
}

double RhoSq::sample(const double* U, double* z) const {
  double ratio = 1.0;
  for (int a = 0; a < dims(); ++a) {
    const Table& t = table(a);
    const double target = U[a] * t.cdf.back();
    std::size_t i = std::upper_bound(t.cdf.begin(), t.cdf.end(), target) - t.cdf.begin();
    i = std::clamp<std::size_t>(i, 1, t.dens.size()) - 1;
    while (t.dens[i] <= 0.0 && i + 1 < t.dens.size()) ++i;
    const double frac = std::clamp((target - t.cdf[i]) / (t.dens[i] * Table::h), 0.0, 1.0);
    const double u = -2.0 + (double(i) + frac) * Table::h;
    z[a] = u * scale(a);
    ratio *= t(u) * t.cdf.back() / t.dens[i];
  }
  return ratio;
}

// ---------------------------------------------------------------- Green functions

double GreenFn::operator()(const double* z) const {
  switch (kind) {
    case Kind::pam3d: {
      const double r = std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
      if (r >= R_G) return 0.0;
      return smooth_step(r / R_G) / (4.0 * pi * r);
    }
    case Kind::she1d: return heat_kernel(z[0], z + 1, 1);
    case Kind::custom: return eval_fn ? eval_fn(z) : 0.0;
  }
  return 0.0;
}

double GreenFn::self_conv(const double* z) const {
  switch (kind) {
    case Kind::pam3d: return (*radial_gg_)(std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]));
    case Kind::she1d: return z[0] > 0.0 ? z[0] * heat_kernel(z[0], z + 1, 1) : 0.0;
    case Kind::custom:
      if (!self_conv_fn) fail_validation("custom Green function needs its self-convolution for c12");
      return self_conv_fn(z);
  }
  return 0.0;
}

GreenFn GreenFn::pam3d(double R_G) {
  if (!(R_G > 0.0)) fail_validation("R_G must be positive");
  GreenFn g;
  g.kind = Kind::pam3d;
  g.d = 3;
  g.spacetime = false;
  g.R_G = R_G;
  // Radial convolution: (G*G)(r) = 1/(8 pi r) int_0^R chi(s) [X(r+s) - X(|r-s|)] ds, X' = chi.
  const int nx = 4097;
  const double hx = R_G / (nx - 1);
  std::vector<double> X(nx, 0.0);
  auto chi = [R_G](double s) { return smooth_step(s / R_G); };
  for (int i = 1; i < nx; ++i) {
    const auto q = gauss_legendre((i - 1) * hx, i * hx, 1);
    double v = 0.0;
    for (std::size_t k = 0; k < q.x.size(); ++k) v += q.w[k] * chi(q.x[k]);
    X[i] = X[i - 1] + v;
  }
  auto Xs = std::make_shared<Spline>(X.begin(), X.end(), 0.0, hx, 1.0, 0.0);
  const double Xend = X.back();
  auto Xf = [Xs, R_G, Xend](double a) { return a >= R_G ? Xend : (*Xs)(a); };
  const int ng = 2049;
  const double hg = 2.0 * R_G / (ng - 1);
  std::vector<double> gg(ng, 0.0);
  {
    const auto q = gauss_legendre(0.0, R_G, 32);
    double v = 0.0;
    for (std::size_t k = 0; k < q.x.size(); ++k) v += q.w[k] * chi(q.x[k]) * chi(q.x[k]);
    gg[0] = v / (4.0 * pi);
  }
  for (int i = 1; i < ng; ++i) {
    const double r = i * hg;
    double v = 0.0;
    auto piece = [&](double a, double b) {
      if (b <= a) return;
      const auto q = gauss_legendre(a, b, 16);
      for (std::size_t k = 0; k < q.x.size(); ++k) {
        const double s = q.x[k];
        v += q.w[k] * chi(s) * (Xf(r + s) - Xf(std::abs(r - s)));
      }
    };
    piece(0.0, std::min(r, R_G));
    piece(std::min(r, R_G), R_G);
    gg[i] = v / (8.0 * pi * r);
  }
  auto ggs = std::make_shared<Spline>(gg.begin(), gg.end(), 0.0, hg);
  const double rmax = 2.0 * R_G;
  g.radial_gg_ = std::make_shared<const std::function<double(double)>>([ggs, rmax](double r) {
    return r >= rmax ? 0.0 : (*ggs)(r);
  });
  return g;
}

GreenFn GreenFn::she1d() {
  GreenFn g;
  g.kind = Kind::she1d;
  g.d = 1;
  g.spacetime = true;
  g.R_G = 0.0;
  return g;
}

GreenFn GreenFn::custom(int d, bool spacetime, std::function<double(const double*)> eval,
                        std::function<double(const double*)> self_conv) {
  if (d < 1 || d > 3) fail_validation("custom Green function dimension must be 1, 2 or 3");
  if (spacetime && d != 1) fail_validation("custom space-time Green functions are supported for d = 1");
  GreenFn g;
  g.kind = Kind::custom;
  g.d = d;
  g.spacetime = spacetime;
  g.eval_fn = std::move(eval);
  g.self_conv_fn = std::move(self_conv);
  return g;
}

// ---------------------------------------------------------------- RQMC

namespace {

std::vector<Estimate> rqmc_multi(int dims, std::size_t n, int replicates, std::uint64_t seed, int nout,
                                 const std::function<void(const double*, double*)>& f) {
  if (dims < 1) fail_validation("rqmc: dims must be positive");
  if (replicates < 2) fail_validation("rqmc: need at least 2 replicates");
  if (n == 0) fail_validation("rqmc: need at least one point per replicate");
  std::vector<std::vector<double>> means(replicates, std::vector<double>(nout, 0.0));
  parallel_for(std::size_t(replicates), [&](std::size_t r) {
    const CounterRng rng(seed, std::uint32_t(r) + 0x51u);
    std::vector<std::uint64_t> shift(dims);
    for (int k = 0; k < dims; ++k) shift[k] = rng.bits64(std::uint64_t(k));
    boost::random::sobol eng(dims);
    std::vector<double> u(dims), out(nout), acc(nout, 0.0);
    constexpr double scale = 1.0 / 9007199254740992.0;
    for (std::size_t i = 0; i < n; ++i) {
      // The engine skips the origin; point 0 completes the net.
      for (int k = 0; k < dims; ++k) {
        const std::uint64_t x = (i == 0 ? 0 : std::uint64_t(eng())) ^ shift[k];
        u[k] = (double(x >> 11) + 0.5) * scale;
      }
      f(u.data(), out.data());
      for (int j = 0; j < nout; ++j) acc[j] += out[j];
    }
    for (int j = 0; j < nout; ++j) means[r][j] = acc[j] / double(n);
  });
  std::vector<Estimate> est(nout);
  for (int j = 0; j < nout; ++j) {
    double m = 0.0;
    for (int r = 0; r < replicates; ++r) m += means[r][j];
    m /= replicates;
    double v = 0.0;
    for (int r = 0; r < replicates; ++r) v += (means[r][j] - m) * (means[r][j] - m);
    v /= double(replicates - 1);
    est[j] = {m, std::sqrt(v / replicates), n};
  }
  return est;
}

std::vector<Estimate> rqmc_multi_adaptive(int dims, const QmcOptions& o, int nout,
                                          const std::function<void(const double*, double*)>& f) {
  std::size_t n = std::max<std::size_t>(o.samples, 1);
  for (;;) {
    auto est = rqmc_multi(dims, n, o.replicates, o.seed, nout, f);
    const double target = std::max(o.rel_tol * std::abs(est[0].value), o.abs_tol);
    if (est[0].stderr_ <= target) return est;
    if (n * 2 > o.max_samples)
      fail_numerical("QMC standard error " + std::to_string(est[0].stderr_) + " above tolerance " +
                     std::to_string(target) + " after " + std::to_string(n) + " points per replicate");
    n *= 2;
  }
}

}  // namespace

Estimate rqmc(int dims, std::size_t n, int replicates, std::uint64_t seed,
              const std::function<double(const double*)>& f) {
  return rqmc_multi(dims, n, replicates, seed, 1, [&](const double* u, double* out) { out[0] = f(u); })[0];
}

Estimate rqmc_adaptive(int dims, const QmcOptions& o, const std::function<double(const double*)>& f) {
  return rqmc_multi_adaptive(dims, o, 1, [&](const double* u, double* out) { out[0] = f(u); })[0];
}

// ---------------------------------------------------------------- constants

namespace {

void check_geometry(const Mollifier& m, const GreenFn& G) {
  if (m.spacetime != G.spacetime || m.d != G.d)
    fail_validation("mollifier and Green function live on different spaces");
  if (G.kind == GreenFn::Kind::pam3d && m.eps > G.R_G / 8.0 * (1.0 + 1e-12))
    fail_validation("PAM renormalisation needs eps <= R_G/8");
}

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
constexpr double kInfTol = 1e300;

// Adaptive Gauss-Kronrod with an absolute tolerance (the relative criterion
// never terminates on subintervals where the integrand vanishes).
double adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol, double* err,
                int depth = 14) {
  double e = 0.0;
  const double v = GK::integrate(f, a, b, 0, 0.0, &e);
  if (e <= abs_tol || depth == 0) {
    if (err) *err += e;
    return v;
  }
  const double m = 0.5 * (a + b);
  return adaptive(f, a, m, 0.5 * abs_tol, err, depth - 1) + adaptive(f, m, b, 0.5 * abs_tol, err, depth - 1);
}

// Unit direction from angular coordinates in the spherical/polar chart.
void direction(int d, double c, double phi, double* w) {
  if (d == 1) {
    w[0] = c < 0.0 ? -1.0 : 1.0;
  } else if (d == 2) {
    w[0] = std::cos(phi);
    w[1] = std::sin(phi);
  } else {
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    w[0] = s * std::cos(phi);
    w[1] = s * std::sin(phi);
    w[2] = c;
  }
}

}  // namespace

double c_eps(const Mollifier& m, const GreenFn& G, double* err) {
  check_geometry(m, G);
  const RhoSq rho(m);
  const double eps = m.eps;
  constexpr double tol = 1e-9;
  double e = 0.0;
  double value = 0.0;
  if (!m.spacetime) {
    const int d = m.d;
    const double rmax = 2.0 * eps * std::sqrt(double(d));
    // The integrand is smooth on spheres: fixed product Gauss rules in angle, adaptive in radius.
    const Nodes qc = gauss_legendre(-1.0, 1.0, 2), qphi = gauss_legendre(0.0, 2.0 * pi, 4);
    auto radial = [&](double r) {
      double z[3];
      double w[3];
      auto at = [&](double c, double phi) {
        direction(d, c, phi, w);
        for (int a = 0; a < d; ++a) z[a] = r * w[a];
        return G(z) * rho(z);
      };
      double ang = 0.0;
      if (d == 1) {
        ang = at(-1.0, 0.0) + at(1.0, 0.0);
      } else if (d == 2) {
        for (std::size_t j = 0; j < qphi.x.size(); ++j) ang += qphi.w[j] * at(0.0, qphi.x[j]);
      } else {
        for (std::size_t i = 0; i < qc.x.size(); ++i)
          for (std::size_t j = 0; j < qphi.x.size(); ++j) ang += qc.w[i] * qphi.w[j] * at(qc.x[i], qphi.x[j]);
      }
      return std::pow(r, d - 1) * ang;
    };
    double pilot = 0.0;
    {
      const Nodes q = gauss_legendre(0.0, rmax, 4);
      for (std::size_t i = 0; i < q.x.size(); ++i) pilot += q.w[i] * radial(q.x[i]);
    }
    value = adaptive(radial, 0.0, rmax, tol * std::abs(pilot), &e);
  } else {
    // t = s^2 removes the t^{-1/2} singularity of the heat kernel.
    const double smax = std::sqrt(2.0) * eps;
    double inner_tol = 0.0;
    auto outer = [&](double s) {
      auto inner = [&](double x) {
        const double z[2] = {s * s, x};
        return 2.0 * s * G(z) * rho(z);
      };
      return adaptive(inner, -2.0 * eps, 0.0, inner_tol, nullptr) + adaptive(inner, 0.0, 2.0 * eps, inner_tol, nullptr);
    };
    double pilot = 0.0;
    {
      inner_tol = kInfTol;
      const Nodes q = gauss_legendre(0.0, smax, 4);
      for (std::size_t i = 0; i < q.x.size(); ++i) pilot += q.w[i] * outer(q.x[i]);
    }
    inner_tol = 0.1 * tol * std::abs(pilot) / smax;
    value = adaptive(outer, 0.0, smax, tol * std::abs(pilot), &e);
    if (G.kind == GreenFn::Kind::custom) {
      // A custom kernel may be nonzero for t <= 0.
      const double tmax = 2.0 * eps * eps;
      auto past = [&](double t) {
        auto inner = [&](double x) {
          const double z[2] = {t, x};
          return G(z) * rho(z);
        };
        return adaptive(inner, -2.0 * eps, 0.0, inner_tol, nullptr) + adaptive(inner, 0.0, 2.0 * eps, inner_tol, nullptr);
      };
      value += adaptive(past, -tmax, 0.0, tol * std::max(std::abs(pilot), std::abs(value)), &e);
    }
  }
  if (!std::isfinite(value)) fail_numerical("c_eps quadrature produced a non-finite value");
  if (e > 1e-5 * std::abs(value) && e > 1e-14)
    fail_numerical("c_eps quadrature did not reach 1e-5 relative accuracy");
  if (err) *err = e;
  return value;
}

namespace {

// Integral of three heat kernels G(tw,.)G(tu-tw, xu-.)G(tv-tw, xv-.) over space.
double three_gaussians(double tw, double tu, double xu, double tv, double xv) {
  const double a = tw, b = tu - tw, c = tv - tw;
  if (a <= 0.0 || b <= 0.0 || c <= 0.0) return 0.0;
  const double s2 = a * b + a * c + b * c;
  const double expo = (c * xu * xu + b * xv * xv + a * (xu - xv) * (xu - xv)) / (4.0 * s2);
  return 2.0 * std::sqrt(pi) * std::pow(4.0 * pi, -1.5) / std::sqrt(s2) * std::exp(-expo);
}

int direction_dims(int d) { return d == 1 ? 1 : d - 1; }

void sample_direction(int d, const double* U, double* w) {
  if (d == 1) direction(1, U[0] - 0.5, 0.0, w);
  else if (d == 2) direction(2, 0.0, 2.0 * pi * U[0], w);
  else direction(3, 2.0 * U[0] - 1.0, 2.0 * pi * U[1], w);
}

double sphere_area(int d) { return d == 1 ? 2.0 : d == 2 ? 2.0 * pi : 4.0 * pi; }

}  // namespace

Estimate c11_eps(const Mollifier& m, const GreenFn& G, const QmcOptions& o) {
  check_geometry(m, G);
  const RhoSq rho(m);
  const int dz = rho.dims();
  const double eps = m.eps;
  if (!m.spacetime) {
    // w = z2 drawn from an equal mixture of radial densities ~ 1/(r^{d-1}(r+s)) around 0, u and v.
    const int d = m.d;
    const double R = G.kind == GreenFn::Kind::custom && !(G.R_G > 0.0) ? 1.0 : G.R_G;
    const double s = eps;
    const double logn = std::log((R + s) / s);
    const double area = sphere_area(d);
    auto fdens = [&](double r) { return r >= R ? 0.0 : 1.0 / (area * std::pow(r, d - 1) * (r + s) * logn); };
    const int dims = 2 * dz + 2 + direction_dims(d);
    return rqmc_multi_adaptive(dims, o, 1, [&](const double* U, double* out) {
      double u[3], v[3], w[3], dir[3], c0[3] = {0, 0, 0};
      const double wt = rho.sample(U, u) * rho.sample(U + dz, v);
      const double* centres[3] = {c0, u, v};
      const int k = std::min(2, int(3.0 * U[2 * dz]));
      const double r = s * std::expm1(U[2 * dz + 1] * logn);
      sample_direction(d, U + 2 * dz + 2, dir);
      for (int a = 0; a < d; ++a) w[a] = centres[k][a] + r * dir[a];
      double q = 0.0;
      for (const double* c : centres) {
        double rr = 0.0;
        for (int a = 0; a < d; ++a) rr += (w[a] - c[a]) * (w[a] - c[a]);
        q += fdens(std::sqrt(rr)) / 3.0;
      }
      double uw[3], vw[3];
      for (int a = 0; a < d; ++a) {
        uw[a] = u[a] - w[a];
        vw[a] = v[a] - w[a];
      }
      const double g = G(w);
      out[0] = (g == 0.0 || q <= 0.0) ? 0.0 : wt * g * G(uw) * G(vw) / q;
    })[0];
  }
  // Space-time: tw = m sin^2(theta) over (0, min(tu, tv)); space integral analytic for the heat kernel.
  const bool heat = G.kind == GreenFn::Kind::she1d;
  const int dims = 2 * dz + (heat ? 1 : 2);
  return rqmc_multi_adaptive(dims, o, 1, [&](const double* U, double* out) {
    double u[2], v[2];
    const double wt = rho.sample(U, u) * rho.sample(U + dz, v);
    const double mt = std::min(u[0], v[0]);
    out[0] = 0.0;
    if (mt <= 0.0) return;
    const double th = 0.5 * pi * U[2 * dz];
    const double tw = mt * std::sin(th) * std::sin(th);
    const double jac = 0.5 * pi * 2.0 * mt * std::sin(th) * std::cos(th);
    if (heat) {
      out[0] = wt * jac * three_gaussians(tw, u[0], u[1], v[0], v[1]);
      return;
    }
    // Generic: x_w from N(0, 2 tw).
    const double sd = std::sqrt(2.0 * tw);
    const double xw = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * U[2 * dz + 1]) * sd;
    const double q = std::exp(-xw * xw / (2.0 * sd * sd)) / (std::sqrt(2.0 * pi) * sd);
    const double w[2] = {tw, xw}, uw[2] = {u[0] - tw, u[1] - xw}, vw[2] = {v[0] - tw, v[1] - xw};
    out[0] = q > 0.0 ? wt * jac * G(w) * G(uw) * G(vw) / q : 0.0;
  })[0];
}

C12Estimate c12_eps(const Mollifier& m, const GreenFn& G, double c_value, const QmcOptions& o) {
  check_geometry(m, G);
  const RhoSq rho(m);
  const int dz = rho.dims();
  const double eps = m.eps;
  const bool heat = G.kind == GreenFn::Kind::she1d;
  // value = int dz3 G(z3) rho2(z3) int rho2(w) [GG(w - z3) - GG(w)]; B = c * int GG rho2.
  auto est = rqmc_multi_adaptive(2 * dz, o, 3, [&](const double* U, double* out) {
    double z3[3], w[3], wz[3];
    double gz;
    if (heat) {
      // z3 drawn from G restricted to 0 < t < 2 eps^2.
      const double t3 = 2.0 * eps * eps * U[0];
      const double x3 = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * U[1]) * std::sqrt(2.0 * t3);
      z3[0] = t3;
      z3[1] = x3;
      gz = 2.0 * eps * eps * rho(z3);
    } else {
      gz = rho.sample(U, z3);
      gz *= G(z3);
    }
    const double ww = rho.sample(U + dz, w);
    for (int a = 0; a < dz; ++a) wz[a] = w[a] - z3[a];
    const double gw = G.self_conv(w);
    out[0] = gz == 0.0 ? 0.0 : gz * ww * (G.self_conv(wz) - gw);
    out[1] = c_value * ww * gw;
    out[2] = out[0] + out[1];
  });
  C12Estimate r;
  r.value = est[0];
  r.delta = est[1];
  r.five = est[2];
  return r;
}

RenormConstants renorm_constants(const Mollifier& m, const GreenFn& G, const QmcOptions& o) {
  RenormConstants rc;
  rc.eps = m.eps;
  rc.c = c_eps(m, G, &rc.c_err);
  rc.c11 = c11_eps(m, G, o);
  rc.c12 = c12_eps(m, G, rc.c, o);
  rc.C = rc.c + rc.c11.value + rc.c12.value.value;
  return rc;
}

}  // namespace she
