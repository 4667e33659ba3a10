#include "she/kernel.hpp"

#include "she/error.hpp"
#include "she/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/sobol.hpp>

#include <cmath>
#include <numbers>

namespace she {

double heat_kernel(double t, const double* x, int d) {
  if (t <= 0.0) return 0.0;
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  return std::pow(4.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-r2 / (4.0 * t));
}

double heat_kernel(double t, const std::vector<double>& x) { return heat_kernel(t, x.data(), int(x.size())); }

int parabolic_degree(const MultiIndex& k) {
  int s = 2 * k[0];
  for (std::size_t i = 1; i < k.size(); ++i) s += k[i];
  return s;
}

std::vector<MultiIndex> multi_indices(int d, int max_degree) {
  std::vector<MultiIndex> out;
  MultiIndex k(d + 1, 0);
  auto rec = [&](auto&& self, int axis, int deg) -> void {
    if (axis == d + 1) {
      out.push_back(k);
      return;
    }
    const int w = axis == 0 ? 2 : 1;
    for (int e = 0; deg + w * e <= max_degree; ++e) {
      k[axis] = e;
      self(self, axis + 1, deg + w * e);
    }
    k[axis] = 0;
  };
  rec(rec, 0, 0);
  return out;
}

double smooth_step(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / (1.0 - s)), b = std::exp(-1.0 / (s - 0.5));
  return a / (a + b);
}

namespace {

constexpr double kTlo = 0.125, kThi = 0.5, kRmax = 0.5;
constexpr double kTc = 0.3125, kTs = 0.1875;

double bump_t(double t) {
  if (t <= kTlo || t >= kThi) return 0.0;
  return std::exp(-0.1 / ((t - kTlo) * (kThi - t)));
}

double bump_r(double r) {
  const double s = r / kRmax;
  if (s >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

double radial_heat(double t, double r, int d) {
  if (t <= 0.0) return 0.0;
  return std::pow(4.0 * std::numbers::pi * t, -0.5 * d) * std::exp(-r * r / (4.0 * t));
}

double norm_tr(double t, double r) { return std::pow(t * t + r * r * r * r, 0.25); }

}  // namespace

double KernelDecomposition::smooth_norm(const double* z) const {
  double r2 = 0.0;
  for (int i = 1; i <= d_; ++i) r2 += z[i] * z[i];
  return std::pow(z[0] * z[0] + r2 * r2, 0.25);
}

double KernelDecomposition::bump(const double* z) const {
  double r2 = 0.0;
  for (int i = 1; i <= d_; ++i) r2 += z[i] * z[i];
  return bump_t(z[0]) * bump_r(std::sqrt(r2));
}

double KernelDecomposition::qbasis(std::size_t l, const double* z) const {
  const MultiIndex& k = multi_[l];
  double v = std::pow((z[0] - kTc) / kTs, k[0]);
  for (int i = 1; i <= d_; ++i) v *= std::pow(z[i] / kRmax, k[i]);
  return v;
}

KernelDecomposition::KernelDecomposition(int d, int r, int n_max) : d_(d), r_(r), n_max_(n_max) {
  if (d < 1 || d > 3) fail_validation("kernel: d must be 1, 2 or 3");
  if (r < 2) fail_validation("kernel: moment order r must be >= 2");
  multi_ = multi_indices(d, r);
  const std::size_t m = multi_.size();

  // Moments of psi_0 P by the radial reduction: angular part in closed form,
  // (t, |x|) part by tensor Gauss-Legendre.
  const Nodes qt = gauss_legendre(0.0, 1.0, 96), qr = gauss_legendre(0.0, 1.0, 96);
  std::vector<double> mom(m, 0.0);
  for (std::size_t a = 0; a < qt.x.size(); ++a) {
    const double t = qt.x[a];
    for (std::size_t b = 0; b < qr.x.size(); ++b) {
      const double rr = qr.x[b];
      const double nrm = norm_tr(t, rr);
      const double psi0 = smooth_step(nrm) - smooth_step(2.0 * nrm);
      if (psi0 == 0.0) continue;
      const double base = qt.w[a] * qr.w[b] * psi0 * radial_heat(t, rr, d) * std::pow(rr, d - 1);
      for (std::size_t i = 0; i < m; ++i) {
        const MultiIndex& k = multi_[i];
        const int kx = parabolic_degree(k) - 2 * k[0];
        mom[i] += base * std::pow(t, k[0]) * std::pow(rr, kx);
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const MultiIndex kx(multi_[i].begin() + 1, multi_[i].end());
    mom[i] *= sphere_moment(kx);
  }

  // Gram-type matrix G_{l,i} = int B q_l z^{k_i}; separable in t and |x|.
  const Nodes bt = gauss_legendre(kTlo, kThi, 64), br = gauss_legendre(0.0, kRmax, 64);
  Eigen::MatrixXd G(m, m);
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t i = 0; i < m; ++i) {
      const MultiIndex& kl = multi_[l];
      const MultiIndex& ki = multi_[i];
      double It = 0.0, Ir = 0.0;
      for (std::size_t a = 0; a < bt.x.size(); ++a)
        It += bt.w[a] * bump_t(bt.x[a]) * std::pow((bt.x[a] - kTc) / kTs, kl[0]) * std::pow(bt.x[a], ki[0]);
      MultiIndex ksum(d);
      int deg = 0;
      for (int j = 1; j <= d; ++j) {
        ksum[j - 1] = kl[j] + ki[j];
        deg += ksum[j - 1];
      }
      const double ang = sphere_moment(ksum);
      if (ang != 0.0) {
        int degl = 0;
        for (int j = 1; j <= d; ++j) degl += kl[j];
        for (std::size_t b = 0; b < br.x.size(); ++b)
          Ir += br.w[b] * bump_r(br.x[b]) * std::pow(br.x[b], d - 1 + deg);
        Ir *= ang / std::pow(kRmax, degl);
      }
      G(l, i) = It * Ir;
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(G);
  const auto sv = svd.singularValues();
  cond_ = sv(0) / sv(sv.size() - 1);
  if (!std::isfinite(cond_) || cond_ > 1e13)
    fail_numerical("kernel: moment-correction system is singular (condition number " + std::to_string(cond_) + ")");

  // Dual basis eta_j = B sum_l C_{jl} q_l with int eta_j z^{k_i} = delta_ij, i.e. C G = I.
  const Eigen::MatrixXd C = G.transpose().fullPivLu().solve(Eigen::MatrixXd::Identity(m, m)).transpose();
  Eigen::VectorXd mu(m);
  for (std::size_t i = 0; i < m; ++i) mu(i) = -mom[i] / (1.0 - std::ldexp(1.0, -(parabolic_degree(multi_[i]) + 2)));
  const Eigen::VectorXd c = C.transpose() * mu;
  coef_.assign(c.data(), c.data() + m);
}

double KernelDecomposition::correction(const double* z) const {
  const double b = bump(z);
  if (b == 0.0) return 0.0;
  double s = 0.0;
  for (std::size_t l = 0; l < coef_.size(); ++l) s += coef_[l] * qbasis(l, z);
  return b * s;
}

double KernelDecomposition::theta(const double* z) const { return smooth_step(smooth_norm(z)); }

double KernelDecomposition::P0(const double* z) const {
  if (z[0] <= 0.0) return 0.0;
  const double nrm = smooth_norm(z);
  if (nrm >= 1.0) return 0.0;
  double v = 0.0;
  const double psi0 = smooth_step(nrm) - smooth_step(2.0 * nrm);
  if (psi0 != 0.0) v += psi0 * heat_kernel(z[0], z + 1, d_);
  v += correction(z);
  double s1[4];
  s1[0] = 4.0 * z[0];
  for (int i = 1; i <= d_; ++i) s1[i] = 2.0 * z[i];
  v -= std::ldexp(correction(s1), d_);
  return v;
}

double KernelDecomposition::Pn(int n, const double* z) const {
  double s[4];
  s[0] = std::ldexp(z[0], 2 * n);
  for (int i = 1; i <= d_; ++i) s[i] = std::ldexp(z[i], n);
  return std::ldexp(P0(s), n * d_);
}

double KernelDecomposition::Pminus(const double* z) const {
  return (1.0 - theta(z)) * heat_kernel(z[0], z + 1, d_) - correction(z);
}

double KernelDecomposition::Pplus(const double* z) const {
  return theta(z) * heat_kernel(z[0], z + 1, d_) + correction(z);
}

double KernelDecomposition::finite_difference(const MultiIndex& k, const double* z,
                                              double (KernelDecomposition::*f)(const double*) const,
                                              double h) const {
  // Fourth-order central stencils applied axis by axis.
  static const double w1[5] = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
  static const double w2[5] = {-1.0 / 12, 4.0 / 3, -2.5, 4.0 / 3, -1.0 / 12};
  static const double w3[5] = {-0.5, 1.0, 0.0, -1.0, 0.5};
  std::vector<std::pair<int, int>> ops;  // (axis, order) with order <= 3 per pass
  for (int a = 0; a <= d_; ++a) {
    int o = k[a];
    while (o > 0) {
      const int take = std::min(o, 3);
      ops.emplace_back(a, take);
      o -= take;
    }
  }
  double zz[4];
  for (int i = 0; i <= d_; ++i) zz[i] = z[i];
  auto rec = [&](auto&& self, std::size_t q) -> double {
    if (q == ops.size()) return (this->*f)(zz);
    const auto [axis, order] = ops[q];
    const double* w = order == 1 ? w1 : order == 2 ? w2 : w3;
    const double saved = zz[axis];
    double s = 0.0;
    for (int j = 0; j < 5; ++j) {
      if (w[j] == 0.0) continue;
      zz[axis] = saved + (j - 2) * h;
      s += w[j] * self(self, q + 1);
    }
    zz[axis] = saved;
    return s / std::pow(h, order);
  };
  return rec(rec, 0);
}

double KernelDecomposition::DkP0(const MultiIndex& k, const double* z) const {
  if (int(k.size()) != d_ + 1) fail_validation("kernel: multi-index has wrong length");
  if (parabolic_degree(k) > r_ + 2) fail_validation("kernel: derivative order exceeds r+2");
  bool zero = true;
  for (int v : k) zero &= v == 0;
  if (zero) return P0(z);
  if (smooth_norm(z) >= 1.0 + 1e-2 || z[0] < -1e-2) return 0.0;
  return finite_difference(k, z, &KernelDecomposition::P0, 2e-3);
}

double KernelDecomposition::DkPn(int n, const MultiIndex& k, const double* z) const {
  if (n < 0) fail_validation("kernel: negative level");
  double s[4];
  s[0] = std::ldexp(z[0], 2 * n);
  for (int i = 1; i <= d_; ++i) s[i] = std::ldexp(z[i], n);
  return std::ldexp(DkP0(k, s), n * (d_ + parabolic_degree(k)));
}

double KernelDecomposition::DkPminus(const MultiIndex& k, const double* z) const {
  if (int(k.size()) != d_ + 1) fail_validation("kernel: multi-index has wrong length");
  bool zero = true;
  for (int v : k) zero &= v == 0;
  if (zero) return Pminus(z);
  return finite_difference(k, z, &KernelDecomposition::Pminus, 2e-3);
}

bool KernelCheck::pass() const {
  return reassembly < kReassemblyTol && moment_max < kMomentTol && scaling < 1e-12 && support_violations == 0;
}

KernelCheck kernel_check(int d, int r, std::size_t points, std::uint64_t seed, int n_max) {
  if (points == 0) fail_validation("kernel check: need at least one point");
  if (n_max < 10) fail_validation("kernel check: n_max must be >= 10 to reach N(z) = 1e-3");
  const KernelDecomposition K(d, r, n_max);
  KernelCheck out;
  out.d = d;
  out.r = r;
  out.n_max = n_max;
  out.points = points;

  boost::random::sobol qrng(d + 2);
  qrng.discard(std::uintmax_t(seed % 4096) * std::uintmax_t(d + 2));
  const double lo = std::log(1e-3), hi = std::log(10.0);
  for (std::size_t q = 0; q < points; ++q) {
    double u[5];
    for (int j = 0; j < d + 2; ++j) u[j] = (double(std::uint64_t(qrng()) >> 11) + 0.5) * 0x1p-53;
    const double rad = std::exp(lo + u[0] * (hi - lo));
    double z[4];
    z[0] = rad * rad * (2.0 * u[1] - 1.0);
    double m = std::sqrt(std::abs(z[0]));
    for (int i = 1; i <= d; ++i) {
      z[i] = rad * (2.0 * u[i + 1] - 1.0);
      m = std::max(m, std::abs(z[i]));
    }
    // rescale so the parabolic sup norm is exactly rad
    const double s = rad / m;
    z[0] *= s * s;
    for (int i = 1; i <= d; ++i) z[i] *= s;

    const double P = heat_kernel(z[0], z + 1, d);
    const double N = K.smooth_norm(z);
    double sum = K.Pminus(z);
    for (int n = 0; n <= n_max; ++n) {
      const double pn = K.Pn(n, z);
      sum += pn;
      if (pn != 0.0 && N >= std::ldexp(1.0, -n)) ++out.support_violations;
      double sz[4];
      sz[0] = z[0] * std::pow(4.0, n);
      for (int i = 1; i <= d; ++i) sz[i] = z[i] * std::pow(2.0, n);
      const double ref = std::pow(2.0, n * d) * K.P0(sz);
      if (ref != 0.0 || pn != 0.0)
        out.scaling = std::max(out.scaling, std::abs(pn - ref) / std::max(std::abs(ref), 1e-300));
    }
    out.reassembly = std::max(out.reassembly, std::abs(sum - P) / std::max(std::abs(P), std::pow(N, -d)));
  }

  // Moments in polar coordinates: composite Gauss in (t, |x|), exact
  // angular rules for polynomials of degree <= 2r.
  out.moment_index = K.moments_indices();
  const std::size_t m = out.moment_index.size();
  std::vector<double> mom(m, 0.0);
  const Nodes qt = gauss_legendre(0.0, 1.0, 32);
  const Nodes qr = d == 1 ? gauss_legendre(-1.0, 1.0, 32) : gauss_legendre(0.0, 1.0, 16);
  std::vector<std::vector<double>> dirs;
  std::vector<double> dw;
  if (d == 1) {
    dirs = {{1.0}};
    dw = {1.0};
  } else {
    const int nphi = 4 * r + 4;
    using G8 = boost::math::quadrature::gauss<double, 8>;
    Nodes qc;
    for (std::size_t c = 0; c < G8::abscissa().size(); ++c) {
      const double x = G8::abscissa()[c], w = G8::weights()[c];
      qc.x.push_back(x);
      qc.w.push_back(w);
      if (x != 0.0) {
        qc.x.push_back(-x);
        qc.w.push_back(w);
      }
    }
    for (int a = 0; a < nphi; ++a) {
      const double phi = 2.0 * std::numbers::pi * a / nphi;
      if (d == 2) {
        dirs.push_back({std::cos(phi), std::sin(phi)});
        dw.push_back(2.0 * std::numbers::pi / nphi);
      } else {
        for (std::size_t c = 0; c < qc.x.size(); ++c) {
          const double ct = qc.x[c], st = std::sqrt(1.0 - ct * ct);
          dirs.push_back({st * std::cos(phi), st * std::sin(phi), ct});
          dw.push_back(qc.w[c] * 2.0 * std::numbers::pi / nphi);
        }
      }
    }
  }
  double absint = 0.0;
  for (std::size_t a = 0; a < qt.x.size(); ++a)
    for (std::size_t b = 0; b < qr.x.size(); ++b)
      for (std::size_t e = 0; e < dirs.size(); ++e) {
        const double rr = qr.x[b];
        double z[4];
        z[0] = qt.x[a];
        for (int i = 1; i <= d; ++i) z[i] = rr * dirs[e][i - 1];
        const double v = K.P0(z) * qt.w[a] * qr.w[b] * dw[e] * (d == 1 ? 1.0 : std::pow(rr, d - 1));
        if (v == 0.0) continue;
        absint += std::abs(v);
        for (std::size_t i = 0; i < m; ++i) {
          double mono = std::pow(z[0], out.moment_index[i][0]);
          for (int j = 1; j <= d; ++j) mono *= std::pow(z[j], out.moment_index[i][j]);
          mom[i] += v * mono;
        }
      }
  out.abs_integral = absint;
  out.moment.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.moment[i] = std::abs(mom[i]) / absint;
    out.moment_max = std::max(out.moment_max, out.moment[i]);
  }
  return out;
}

}  // namespace she
