#include "she/solver.hpp"

#include "she/besov.hpp"
#include "she/error.hpp"
#include "she/fft.hpp"
#include "she/kernel.hpp"
#include "she/parallel.hpp"
#include "she/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace she {

using cplx = std::complex<double>;

Equation parse_equation(const std::string& s) {
  if (s == "pam2d") return Equation::pam2d;
  if (s == "pam3d") return Equation::pam3d;
  if (s == "she1d") return Equation::she1d;
  fail_validation("unknown equation '" + s + "' (expected pam2d, pam3d or she1d)");
}

std::string to_string(Equation e) {
  switch (e) {
    case Equation::pam2d: return "pam2d";
    case Equation::pam3d: return "pam3d";
    case Equation::she1d: return "she1d";
  }
  return "";
}

int equation_dim(Equation e) { return e == Equation::pam2d ? 2 : e == Equation::pam3d ? 3 : 1; }
bool equation_spacetime(Equation e) { return e == Equation::she1d; }

InitialCondition InitialCondition::dirac(std::vector<double> x0) {
  InitialCondition u;
  u.kind = Kind::dirac;
  u.x0 = std::move(x0);
  return u;
}
InitialCondition InitialCondition::constant(double c) {
  InitialCondition u;
  u.kind = Kind::constant;
  u.c = c;
  return u;
}
InitialCondition InitialCondition::from_field(Field f) {
  InitialCondition u;
  u.kind = Kind::field;
  u.f = std::move(f);
  return u;
}

double SolverConfig::step() const {
  const double target = dt > 0.0 ? dt : grid.dx() * grid.dx() / 4.0;
  if (!(T > 0.0)) return target;
  return T / std::ceil(T / target - 1e-9);
}

std::size_t SolverConfig::steps() const { return std::size_t(std::llround(T / step())); }

Mollifier SolverConfig::mollifier(double e) const {
  Mollifier m;
  m.eps = e;
  m.sharpness = sharpness;
  m.spacetime = equation_spacetime(equation);
  m.d = equation_dim(equation);
  return m;
}

namespace {

void validate(const SolverConfig& cfg) {
  if (cfg.grid.d != equation_dim(cfg.equation))
    fail_validation("grid dimension " + std::to_string(cfg.grid.d) + " does not match " + to_string(cfg.equation));
  if (cfg.grid.N < 4 || cfg.grid.N % 2) fail_validation("grid N must be even and at least 4");
  if (!(cfg.grid.L > 0.0)) fail_validation("box length must be positive");
  if (!(cfg.T > 0.0)) fail_validation("final time must be positive");
  if (cfg.dt < 0.0) fail_validation("dt must be nonnegative");
  if (cfg.scheme == Scheme::semi_implicit && cfg.step() > cfg.grid.dx() * cfg.grid.dx() / (2.0 * cfg.grid.d))
    fail_validation("semi-implicit scheme needs dt <= dx^2/(2d)");
  for (double t : cfg.snapshots)
    if (t < 0.0 || t > cfg.T * (1 + 1e-12)) fail_validation("snapshot time outside [0, T]");
}

Grid space_grid(const SolverConfig& cfg) {
  Grid g = cfg.grid;
  g.T = 0.0;
  g.M = 0;
  return g;
}

std::size_t node_index(const Grid& g, const std::vector<double>& x) {
  std::size_t flat = 0;
  for (int a = 0; a < g.d; ++a) {
    const double xa = a < int(x.size()) ? x[a] : 0.5 * g.L;
    long i = std::lround(xa / g.dx());
    i = ((i % long(g.N)) + long(g.N)) % long(g.N);
    flat = flat * g.N + std::size_t(i);
  }
  return flat;
}

Field initial_field(const SolverConfig& cfg) {
  const Grid g = space_grid(cfg);
  Field u(g, FieldKind::spatial);
  switch (cfg.u0.kind) {
    case InitialCondition::Kind::dirac:
      u.values[node_index(g, cfg.u0.x0)] = std::pow(g.dx(), -g.d);
      break;
    case InitialCondition::Kind::constant: std::fill(u.values.begin(), u.values.end(), cfg.u0.c); break;
    case InitialCondition::Kind::field:
      if (cfg.u0.f.grid.d != g.d || cfg.u0.f.grid.N != g.N || cfg.u0.f.kind != FieldKind::spatial)
        fail_validation("initial field does not match the solver grid");
      u.values.assign(cfg.u0.f.values.begin(), cfg.u0.f.values.begin() + g.space_size());
      break;
  }
  return u;
}

std::vector<std::size_t> snapshot_steps(const SolverConfig& cfg) {
  std::vector<double> ts = cfg.snapshots.empty() ? std::vector<double>{cfg.T} : cfg.snapshots;
  std::sort(ts.begin(), ts.end());
  std::vector<std::size_t> out;
  for (double t : ts) out.push_back(std::size_t(std::llround(t / cfg.step())));
  return out;
}

class Recorder {
public:
  Recorder(const SolverConfig& cfg, Trajectory& tr) : cfg_(cfg), tr_(tr), steps_(snapshot_steps(cfg)) {}

  void maybe(std::size_t k, const Field& u) {
    while (next_ < steps_.size() && steps_[next_] == k) {
      const double t = cfg_.t_start + double(k) * cfg_.step();
      tr_.times.push_back(t);
      tr_.snapshots.push_back(u);
      SnapshotDiag dg{t, 0.0, u.values[0], u.values[0], 0.0};
      const double vol = std::pow(u.grid.dx(), u.grid.d);
      for (std::size_t i = 0; i < u.values.size(); ++i) {
        const double v = u.values[i];
        dg.mass += v * vol;
        dg.min = std::min(dg.min, v);
        dg.max = std::max(dg.max, v);
        dg.weighted_sup =
            std::max(dg.weighted_sup, std::abs(v) * std::exp(-(t + cfg_.ell) * (1.0 + centre_radius(u.grid, i))));
      }
      tr_.diag.push_back(dg);
      ++next_;
    }
  }

private:
  const SolverConfig& cfg_;
  Trajectory& tr_;
  std::vector<std::size_t> steps_;
  std::size_t next_ = 0;
};

void guard(const Field& u, double t) {
  for (double v : u.values)
    if (!std::isfinite(v) || std::abs(v) > 1e200)
      fail_numerical("solution blew up at t = " + std::to_string(t));
}

// Applies the Fourier multiplier `fac` (already divided by N^d) in place.
void apply_multiplier(RealFFT& fft, std::vector<cplx>& buf, const std::vector<double>& fac, double* u) {
  fft.forward(u, buf.data());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] *= fac[i];
  fft.backward(buf.data(), u);
}

std::size_t noise_offset(const SolverConfig& cfg) {
  return std::size_t(std::llround(cfg.t_start / cfg.step()));
}

}  // namespace

double centre_radius(const Grid& g, std::size_t flat) {
  double r2 = 0.0;
  for (int a = 0; a < g.d; ++a) {
    const double x = double(flat % g.N) * g.dx() - 0.5 * g.L;
    flat /= g.N;
    r2 += x * x;
  }
  return std::sqrt(r2);
}

double weighted_distance(const Field& a, const Field& b, double t, double ell, double p) {
  if (a.values.size() != b.values.size()) fail_validation("weighted_distance: fields differ in size");
  const double vol = std::pow(a.grid.dx(), a.grid.d);
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double v = std::abs(a.values[i] - b.values[i]) * std::exp(-(t + ell) * (1.0 + centre_radius(a.grid, i)));
    s = std::isinf(p) ? std::max(s, v) : s + vol * std::pow(v, p);
  }
  return std::isinf(p) ? s : std::pow(s, 1.0 / p);
}

double auto_renorm_constant(Equation e, const Mollifier& m, double R_G, const QmcOptions& o) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, double, double>, double> cache;
  const auto key = std::make_tuple(int(e), m.eps, R_G, m.sharpness);
  {
    std::lock_guard lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  double C = 0.0;
  switch (e) {
    case Equation::pam3d: C = renorm_constants(m, GreenFn::pam3d(R_G), o).C; break;
    case Equation::she1d: C = renorm_constants(m, GreenFn::she1d(), o).C; break;
    case Equation::pam2d: {
      const auto G = GreenFn::custom(2, false, [R_G](const double* z) {
        const double r = std::hypot(z[0], z[1]);
        return r >= R_G ? 0.0 : smooth_step(r / R_G) * std::log(R_G / r) / (2.0 * std::numbers::pi);
      });
      if (m.eps > R_G / 8.0) fail_validation("PAM renormalisation needs eps <= R_G/8");
      C = c_eps(m, G);
      break;
    }
  }
  std::lock_guard lk(mu);
  cache.emplace(key, C);
  return C;
}

Field sample_equation_noise(const SolverConfig& cfg, double eps_max) {
  validate(cfg);
  Grid g = space_grid(cfg);
  if (!equation_spacetime(cfg.equation)) return sample_white_noise(g, FieldKind::spatial, cfg.seed);
  const double dt = cfg.step();
  const std::size_t used = noise_offset(cfg) + cfg.steps() + 1;
  const std::size_t pad = std::size_t(std::ceil(2.0 * eps_max * eps_max / dt)) + 1;
  g.M = used + pad;
  g.T = double(g.M) * dt;
  return sample_white_noise(g, FieldKind::spacetime, cfg.seed);
}

Field smooth_noise(const Field& raw, const SolverConfig& cfg, double eps) {
  return mollify(raw, cfg.mollifier(eps));
}

Trajectory solve_with_noise(const SolverConfig& cfg, const Field& xi, double C) {
  validate(cfg);
  const bool st = equation_spacetime(cfg.equation);
  const Grid g = space_grid(cfg);
  const std::size_t n = g.space_size();
  if (xi.grid.d != g.d || xi.grid.N != g.N || (xi.kind == FieldKind::spacetime) != st)
    fail_validation("noise field does not match the solver grid");
  const double dt = cfg.step();
  const std::size_t K = cfg.steps(), off = noise_offset(cfg);
  if (st && off + K + 1 > xi.grid.M) fail_validation("noise record shorter than the requested time span");
  if (st && std::abs(xi.grid.dt() - dt) > 1e-12 * dt) fail_validation("noise time step differs from the solver step");

  Trajectory tr;
  tr.C_eps = C;
  Recorder rec(cfg, tr);
  Field u = initial_field(cfg);
  RealFFT fft(g.d, g.N);
  std::vector<cplx> buf(fft.complex_size());
  std::vector<double> fac = fft.wavenumber_sq(g.L);
  for (double& f : fac) f = std::exp(-dt * f) / double(n);

  std::vector<double> half(n);
  auto half_factor = [&](std::size_t k) {
    const double* x = st ? xi.slice(off + k) : xi.values.data();
    for (std::size_t i = 0; i < n; ++i) half[i] = std::exp(0.5 * dt * (x[i] - C));
  };
  half_factor(0);
  rec.maybe(0, u);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < n; ++i) u.values[i] *= half[i];
    apply_multiplier(fft, buf, fac, u.values.data());
    if (st) half_factor(k + 1);
    for (std::size_t i = 0; i < n; ++i) u.values[i] *= half[i];
    guard(u, cfg.t_start + double(k + 1) * dt);
    rec.maybe(k + 1, u);
  }
  return tr;
}

Trajectory solve_renormalised(const SolverConfig& cfg) {
  validate(cfg);
  const double C = cfg.C_eps ? *cfg.C_eps : auto_renorm_constant(cfg.equation, cfg.mollifier(cfg.eps), cfg.R_G, cfg.qmc);
  const Field raw = sample_equation_noise(cfg, cfg.eps);
  return solve_with_noise(cfg, smooth_noise(raw, cfg, cfg.eps), C);
}

Trajectory solve_ito_with_noise(const SolverConfig& cfg, const Field& raw) {
  validate(cfg);
  if (cfg.equation != Equation::she1d) fail_validation("the Ito reference is defined for she1d only");
  const Grid g = space_grid(cfg);
  const std::size_t n = g.space_size();
  const double dt = cfg.step(), dx = g.dx();
  const std::size_t K = cfg.steps(), off = noise_offset(cfg);
  if (raw.kind != FieldKind::spacetime || off + K > raw.grid.M) fail_validation("noise record too short");
  Trajectory tr;
  Recorder rec(cfg, tr);
  Field u = initial_field(cfg);
  RealFFT fft(g.d, g.N);
  std::vector<cplx> buf(fft.complex_size());
  std::vector<double> fac = fft.symbol(g.L, [dx](double k) { return (2.0 - 2.0 * std::cos(k * dx)) / (dx * dx); });
  for (double& f : fac) f = 1.0 / ((1.0 + dt * f) * double(n));
  rec.maybe(0, u);
  for (std::size_t k = 0; k < K; ++k) {
    const double* w = raw.slice(off + k);
    for (std::size_t i = 0; i < n; ++i) u.values[i] += u.values[i] * w[i] * dt;
    apply_multiplier(fft, buf, fac, u.values.data());
    guard(u, cfg.t_start + double(k + 1) * dt);
    rec.maybe(k + 1, u);
  }
  return tr;
}

Trajectory solve_ito_reference(const SolverConfig& cfg) {
  return solve_ito_with_noise(cfg, sample_equation_noise(cfg, cfg.eps));
}

std::vector<ConvergenceRow> convergence_study(const SolverConfig& base, const ConvergenceOptions& o) {
  if (o.eps_list.size() < 2) fail_validation("convergence study needs at least two eps values");
  if (o.seeds.empty()) fail_validation("convergence study needs at least one seed");
  std::vector<double> eps = o.eps_list;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  for (double e : eps)
    if (e < 2.0 * base.grid.dx() * (1 - 1e-12))
      fail_validation("eps = " + std::to_string(e) + " is under-resolved on this grid (need eps >= 2 dx)");
  std::vector<double> C(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i)
    C[i] = base.C_eps ? *base.C_eps : auto_renorm_constant(base.equation, base.mollifier(eps[i]), base.R_G, base.qmc);

  std::vector<ConvergenceRow> rows;
  for (std::uint64_t seed : o.seeds) {
    SolverConfig cfg = base;
    cfg.seed = seed;
    const Field raw = sample_equation_noise(cfg, eps.front());
    std::vector<Trajectory> trs;
    for (std::size_t i = 0; i < eps.size(); ++i) trs.push_back(solve_with_noise(cfg, smooth_noise(raw, cfg, eps[i]), C[i]));
    auto dist = [&](const Trajectory& a, const Trajectory& b) {
      double d = 0.0;
      for (std::size_t s = 0; s < a.snapshots.size(); ++s)
        d = std::max(d, weighted_distance(a.snapshots[s], b.snapshots[s], a.times[s], cfg.ell, o.p));
      return d;
    };
    for (std::size_t i = 0; i + 1 < eps.size(); ++i) rows.push_back({seed, eps[i], eps[i + 1], dist(trs[i], trs[i + 1])});
    if (o.ito && cfg.equation == Equation::she1d) {
      const Trajectory ito = solve_ito_with_noise(cfg, raw);
      for (std::size_t i = 0; i < eps.size(); ++i) rows.push_back({seed, eps[i], 0.0, dist(trs[i], ito)});
    }
  }
  return rows;
}

std::vector<NormDiag> weighted_norm_diag(const Trajectory& tr, double alpha, double p, double ell, int r,
                                         bool shift_time, int n_min, int n_max) {
  std::vector<NormDiag> out;
  if (tr.snapshots.empty()) return out;
  const WaveletBasis b = build_basis(r);
  for (std::size_t s = 0; s < tr.snapshots.size(); ++s) {
    const Field& u = tr.snapshots[s];
    const double t = tr.times[s];
    const int nm = n_max >= 0 ? n_max : int(std::floor(std::log2(1.0 / u.grid.dx()) + 1e-9)) - 2;
    const double shift = shift_time ? std::ldexp(1.0, -2 * n_min) : 0.0;
    NormDiag dg{t, 0.0, 0.0, 0.0};
    const Field zero(u.grid, FieldKind::spatial);
    dg.weighted_lp = weighted_distance(u, zero, t + shift, ell, p);
    for (double v : u.values) dg.unweighted_sup = std::max(dg.unweighted_sup, std::abs(v));
    if (nm >= n_min) {
      const auto pyr = analyze(u, b, n_min, nm);
      dg.weighted_besov = besov_norm(pyr, {alpha, p, r}, WeightFamily::exponential(t + ell + shift), &u.grid);
    }
    out.push_back(dg);
  }
  return out;
}

Field pam2d_transformed(const Grid& g0, const Field& xi, double C, const Field& u0, double T) {
  Grid g = g0;
  g.T = 0.0;
  g.M = 0;
  if (g.d != 2) fail_validation("pam2d_transformed expects a 2-d grid");
  const std::size_t n = g.space_size();
  RealFFT fft(2, g.N);
  const std::size_t nc = fft.complex_size();
  auto k2 = fft.wavenumber_sq(g.L);
  auto kx = fft.wavenumber_axis(g.L, 0), ky = fft.wavenumber_axis(g.L, 1);
  const double knyq = std::numbers::pi * double(g.N) / g.L;
  for (std::size_t i = 0; i < nc; ++i) {
    if (std::abs(std::abs(kx[i]) - knyq) < 1e-9 * knyq) kx[i] = 0.0;
    if (std::abs(std::abs(ky[i]) - knyq) < 1e-9 * knyq) ky[i] = 0.0;
  }
  std::vector<cplx> hat(nc), tmp(nc);
  std::vector<double> V(n), w(n), wx(n), wy(n);
  double Vbar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    V[i] = xi.values[i] - C;
    Vbar += V[i];
  }
  Vbar /= double(n);
  // Laplacian w = -(V - Vbar): w_hat = (V - Vbar)_hat / |k|^2.
  for (std::size_t i = 0; i < n; ++i) w[i] = V[i] - Vbar;
  fft.forward(w.data(), hat.data());
  hat[0] = 0.0;
  for (std::size_t i = 1; i < nc; ++i) hat[i] /= k2[i] * double(n);
  auto deriv = [&](const std::vector<cplx>& h, const std::vector<double>& k, std::vector<double>& outv) {
    for (std::size_t i = 0; i < nc; ++i) tmp[i] = cplx(0.0, k[i]) * h[i];
    fft.backward(tmp.data(), outv.data());
  };
  tmp = hat;
  fft.backward(tmp.data(), w.data());
  deriv(hat, kx, wx);
  deriv(hat, ky, wy);
  std::vector<double> pot(n);
  for (std::size_t i = 0; i < n; ++i) pot[i] = wx[i] * wx[i] + wy[i] * wy[i] + Vbar;

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = u0.values[i] * std::exp(-w[i]);
  std::vector<double> lap(n), gx(n), gy(n);
  std::vector<cplx> vh(nc);
  auto rhs = [&](const std::vector<double>& x, std::vector<double>& out) {
    fft.forward(x.data(), vh.data());
    for (std::size_t i = 0; i < nc; ++i) vh[i] /= double(n);
    for (std::size_t i = 0; i < nc; ++i) tmp[i] = -k2[i] * vh[i];
    fft.backward(tmp.data(), lap.data());
    deriv(vh, kx, gx);
    deriv(vh, ky, gy);
    for (std::size_t i = 0; i < n; ++i) out[i] = lap[i] + 2.0 * (wx[i] * gx[i] + wy[i] * gy[i]) + pot[i] * x[i];
  };
  double kmax = 0.0;
  for (double k : k2) kmax = std::max(kmax, k);
  double pmax = 0.0;
  for (double p : pot) pmax = std::max(pmax, std::abs(p));
  const std::size_t K = std::size_t(std::ceil(T / (0.25 / (kmax + pmax))));
  const double h = T / double(K);
  std::vector<double> k1(n), k2v(n), k3(n), k4(n), y(n);
  for (std::size_t s = 0; s < K; ++s) {
    rhs(v, k1);
    for (std::size_t i = 0; i < n; ++i) y[i] = v[i] + 0.5 * h * k1[i];
    rhs(y, k2v);
    for (std::size_t i = 0; i < n; ++i) y[i] = v[i] + 0.5 * h * k2v[i];
    rhs(y, k3);
    for (std::size_t i = 0; i < n; ++i) y[i] = v[i] + h * k3[i];
    rhs(y, k4);
    for (std::size_t i = 0; i < n; ++i) v[i] += h / 6.0 * (k1[i] + 2.0 * k2v[i] + 2.0 * k3[i] + k4[i]);
  }
  Field u(g, FieldKind::spatial);
  for (std::size_t i = 0; i < n; ++i) u.values[i] = v[i] * std::exp(w[i]);
  return u;
}

}  // namespace she
