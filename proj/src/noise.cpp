#include "she/noise.hpp"

#include "she/error.hpp"
#include "she/fft.hpp"
#include "she/parallel.hpp"
#include "she/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace she {

Field sample_white_noise(const Grid& g, FieldKind kind, std::uint64_t seed) {
  if (kind == FieldKind::modelled) fail_validation("white noise is spatial or spacetime");
  if (kind == FieldKind::spacetime && g.M == 0) fail_validation("spacetime noise needs M > 0 time slices");
  Field f(g, kind);
  const double sd = 1.0 / std::sqrt(g.cell_volume(kind == FieldKind::spacetime));
  const CounterRng rng(seed);
  parallel_chunks(f.values.size(), 1 << 14, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) f.values[i] = sd * rng.normal(i);
  });
  return f;
}

namespace {

double raw_bump(double u, double s) {
  const double v = 1.0 - u * u;
  return v > 0.0 ? std::exp(-s / v) : 0.0;
}

double bump_integral(double s, double upper) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  if (upper <= -1.0) return 0.0;
  upper = std::min(upper, 1.0);
  return GK::integrate([s](double u) { return raw_bump(u, s); }, -1.0, upper, 15, 1e-14);
}

}  // namespace

double Mollifier::normalization() const {
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard lk(mu);
  auto it = cache.find(sharpness);
  if (it != cache.end()) return it->second;
  const double z = bump_integral(sharpness, 1.0);
  cache.emplace(sharpness, z);
  return z;
}

double Mollifier::bump(double u) const { return raw_bump(u, sharpness) / normalization(); }

double Mollifier::bump_cdf(double u) const {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return bump_integral(sharpness, u) / normalization();
}

double Mollifier::rho(const double* z) const {
  double v = std::pow(eps, -scaling_sum());
  int i = 0;
  if (spacetime) v *= bump(z[i++] / (eps * eps));
  for (int a = 0; a < d; ++a) v *= space_bump((reflect ? -z[i++] : z[i++]) / eps);
  return v;
}

namespace {

// Sampled 1-d factor on a periodic axis, normalized to unit discrete mass.
std::vector<double> axis_kernel(const Mollifier& m, std::size_t n, double h, double scale, bool flip, bool space) {
  std::vector<double> k(n, 0.0);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const long off = j <= n / 2 ? long(j) : long(j) - long(n);
    const double u = (flip ? -1.0 : 1.0) * double(off) * h / scale;
    k[j] = space ? m.space_bump(u) : m.bump(u);
    s += k[j];
  }
  if (!(s > 0.0)) fail_validation("mollifier under-resolved on this grid");
  for (double& v : k) v /= s;
  return k;
}

}  // namespace

Field mollify(const Field& noise, const Mollifier& m) {
  const Grid& g = noise.grid;
  const bool st = noise.kind == FieldKind::spacetime;
  if (noise.kind == FieldKind::modelled) fail_validation("mollify expects a noise field");
  if (m.eps < 2.0 * g.dx() * (1 - 1e-12))
    fail_validation("mollify: eps = " + std::to_string(m.eps) + " is under-resolved; need eps >= 2*dx = " +
                    std::to_string(2.0 * g.dx()));
  if (st && m.eps * m.eps < 2.0 * g.dt() * (1 - 1e-12))
    fail_validation("mollify: eps^2 must be at least 2*dt");
  if (m.spacetime != st) fail_validation("mollify: mollifier and field kinds differ");
  if (!(std::abs(m.skew) < 1.0)) fail_validation("mollifier skew must lie in (-1, 1)");
  Field out = noise;
  const auto shape = noise.shape();
  std::size_t axis = 0;
  if (st) circular_convolve_axis(out.values, shape, axis++, axis_kernel(m, g.M, g.dt(), m.eps * m.eps, false, false));
  for (int a = 0; a < g.d; ++a)
    circular_convolve_axis(out.values, shape, axis++, axis_kernel(m, g.N, g.dx(), m.eps, m.reflect, true));
  return out;
}

double regularity_slope(const Field& f, double p, const WaveletBasis& b, int n_min, int n_max,
                        std::vector<double>* aggregates) {
  if (n_max - n_min + 1 < 4) fail_validation("estimate_regularity: need at least 4 usable levels");
  const auto pyr = analyze(f, b, n_min, n_max);
  std::vector<double> xs, ys;
  for (const auto& lev : pyr.levels) {
    const std::size_t nt = pyr.spacetime ? lev.axes[0].count : 1;
    if (nt == 0) continue;
    const std::size_t nx = lev.points() / nt;
    const double vol = std::ldexp(1.0, -lev.n * pyr.d);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (const auto& c : lev.coeffs) {
      for (std::size_t t = 0; t < nt; ++t) {
        double s = 0.0;
        for (std::size_t x = 0; x < nx; ++x) s += vol * std::pow(std::abs(c[t * nx + x]), p);
        acc += s;
        ++cnt;
      }
    }
    const double agg = std::pow(acc / double(cnt), 1.0 / p);
    if (aggregates) aggregates->push_back(agg);
    if (agg > 0.0) {
      xs.push_back(lev.n);
      ys.push_back(std::log2(agg));
    }
  }
  if (xs.size() < 4) fail_validation("estimate_regularity: fewer than 4 usable levels");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= double(xs.size());
  my /= double(xs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxy += (xs[i] - mx) * (ys[i] - my), sxx += (xs[i] - mx) * (xs[i] - mx);
  return sxy / sxx;
}

RegularityEstimate summarize_regularity(std::vector<double> per_field, std::uint64_t bootstrap_seed) {
  if (per_field.empty()) fail_validation("estimate_regularity: no fields");
  RegularityEstimate est;
  est.per_field = std::move(per_field);
  double mean = 0.0;
  for (double v : est.per_field) mean += v;
  mean /= double(est.per_field.size());
  est.alpha_hat = mean;

  const int B = 2000;
  std::vector<double> boot(B);
  const CounterRng rng(bootstrap_seed, 7);
  const std::size_t n = est.per_field.size();
  for (int r = 0; r < B; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = std::size_t(rng.uniform(std::uint64_t(r) * n + i) * double(n)) % n;
      s += est.per_field[pick];
    }
    boot[r] = s / double(n);
  }
  std::sort(boot.begin(), boot.end());
  est.ci_lo = boot[std::size_t(0.025 * B)];
  est.ci_hi = boot[std::size_t(0.975 * B) - 1];
  est.regular = est.alpha_hat >= 0.0;
  return est;
}

RegularityEstimate estimate_regularity(const std::vector<Field>& fields, double p, const WaveletBasis& b, int n_min,
                                       int n_max, std::uint64_t bootstrap_seed) {
  if (fields.empty()) fail_validation("estimate_regularity: no fields");
  std::vector<double> per(fields.size());
  const double half = (fields[0].kind == FieldKind::spacetime ? 2 + fields[0].grid.d : fields[0].grid.d) / 2.0;
  for (std::size_t i = 0; i < fields.size(); ++i) per[i] = -half - regularity_slope(fields[i], p, b, n_min, n_max);
  return summarize_regularity(std::move(per), bootstrap_seed);
}

}  // namespace she
