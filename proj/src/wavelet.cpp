#include "she/wavelet.hpp"

#include "she/error.hpp"
#include "she/parallel.hpp"

#include <Eigen/Dense>
#include <boost/math/filters/daubechies.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace she {

namespace {

template <std::size_t... P>
std::vector<double> filter_dispatch(int N, std::index_sequence<P...>) {
  std::vector<double> out;
  ((P + 2 == std::size_t(N) ? (void)[&] {
     const auto f = boost::math::filters::daubechies_scaling_filter<double, P + 2>();
     out.assign(f.begin(), f.end());
   }()
                            : void()),
   ...);
  return out;
}

std::vector<double> daubechies_filter(int N) {
  if (N < 2 || N > 19) fail_validation("Daubechies order must lie in [2, 19]");
  return filter_dispatch(N, std::make_index_sequence<18>{});
}

// phi on 2^-J Z from its integer values (eigenvector of the refinement
// operator, normalized to sum 1) and repeated refinement.
std::vector<double> cascade(const std::vector<double>& a, int J) {
  const int L = int(a.size());
  const int S = L - 1;
  const int m = S - 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m + 1, m);
  for (int n = 1; n <= m; ++n)
    for (int j = 1; j <= m; ++j) {
      const int k = 2 * n - j;
      if (k >= 0 && k < L) A(n - 1, j - 1) = a[k];
    }
  A.topRows(m) -= Eigen::MatrixXd::Identity(m, m);
  A.row(m).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  rhs(m) = 1.0;
  const Eigen::VectorXd v = A.colPivHouseholderQr().solve(rhs);

  const long total = long(S) << J;
  std::vector<double> phi(total + 1, 0.0);
  for (int n = 1; n <= m; ++n) phi[long(n) << J] = v(n - 1);
  for (int lev = 1; lev <= J; ++lev) {
    const long step = 1L << (J - lev);
    for (long i = step; i < total; i += 2 * step) {
      double s = 0.0;
      for (int k = 0; k < L; ++k) {
        const long idx = 2 * i - (long(k) << J);
        if (idx > 0 && idx < total) s += a[k] * phi[idx];
      }
      phi[i] = s;
    }
  }
  return phi;
}

}  // namespace

int daubechies_order_for(int r) {
  // Smallest N whose Hoelder exponent exceeds r.
  switch (r) {
    case 1: return 3;
    case 2: return 6;
    case 3: return 9;
    case 4: return 14;
    case 5: return 18;
    default: fail_validation("wavelet regularity r must lie in {1,...,5}");
  }
}

double WaveletBasis::lookup(const std::vector<double>& tab, double x) const {
  const double u = std::ldexp(x, J);
  if (!(u > 0.0) || u >= double(tab.size() - 1)) return 0.0;
  const double fl = std::floor(u);
  const std::size_t i = std::size_t(fl);
  const double w = u - fl;
  if (w == 0.0) return tab[i];
  return (1.0 - w) * tab[i] + w * tab[i + 1];
}

WaveletBasis build_basis(int r) {
  WaveletBasis b;
  b.r = r;
  b.N = daubechies_order_for(r);
  b.h = daubechies_filter(b.N);
  const int L = int(b.h.size());
  b.a.resize(L);
  b.g.resize(L);
  for (int k = 0; k < L; ++k) {
    b.a[k] = std::numbers::sqrt2 * b.h[k];
    b.g[k] = (k % 2 ? -1.0 : 1.0) * b.h[L - 1 - k];
  }
  b.phi_tab = cascade(b.a, b.J);
  const long total = long(b.phi_tab.size()) - 1;
  b.psi_tab.assign(total + 1, 0.0);
  for (long i = 0; i <= total; ++i) {
    double s = 0.0;
    for (int k = 0; k < L; ++k) {
      const long idx = 2 * i - (long(k) << b.J);
      if (idx > 0 && idx < total) s += b.g[k] * b.phi_tab[idx];
    }
    b.psi_tab[i] = std::numbers::sqrt2 * s;
  }
  return b;
}

double rescaled(const WaveletBasis& b, int n, bool spacetime, unsigned mask, const std::vector<double>& center,
                const std::vector<double>& point) {
  double v = 1.0;
  for (std::size_t ax = 0; ax < center.size(); ++ax) {
    const double s = (spacetime && ax == 0) ? std::ldexp(1.0, 2 * n) : std::ldexp(1.0, n);
    v *= std::sqrt(s) * b.profile((mask >> ax) & 1u, s * (point[ax] - center[ax]));
    if (v == 0.0) return 0.0;
  }
  return v;
}

std::size_t CoeffLevel::points() const {
  std::size_t p = 1;
  for (const auto& a : axes) p *= a.count;
  return p;
}

double CoeffPyramid::sum_squares() const {
  double s = 0.0;
  for (double c : phi.coeffs.at(0)) s += c * c;
  for (const auto& l : levels)
    for (const auto& v : l.coeffs)
      for (double c : v) s += c * c;
  return s;
}

std::vector<LatticeAxis> lattice_axes(const Grid& g, bool spacetime, int n, int support) {
  std::vector<LatticeAxis> axes;
  if (spacetime) {
    LatticeAxis t;
    t.spacing = std::ldexp(1.0, -2 * n);
    t.periodic = false;
    const double t_last = double(g.M - 1) * g.dt();
    const double c = std::floor(t_last / t.spacing + 1e-9) - support;
    t.count = c >= 0 ? std::size_t(c) + 1 : 0;
    axes.push_back(t);
  }
  for (int i = 0; i < g.d; ++i) {
    LatticeAxis x;
    x.spacing = std::ldexp(1.0, -n);
    const double c = g.L / x.spacing;
    if (std::abs(c - std::round(c)) > 1e-9 || c < 1.0)
      fail_validation("box side must be a multiple of the level-" + std::to_string(n) + " lattice spacing");
    x.count = std::size_t(std::llround(c));
    axes.push_back(x);
  }
  return axes;
}

namespace {

struct Band {
  std::vector<std::size_t> j;
  std::vector<double> w;
};

std::vector<Band> axis_bands(const WaveletBasis& b, const AxisProfile& p, double scale, double h, std::size_t n_grid,
                             const LatticeAxis& lat) {
  std::vector<Band> bands(lat.count);
  const double S = b.support();
  const double amp = std::sqrt(scale) * h;
  for (std::size_t k = 0; k < lat.count; ++k) {
    const double c = lat.origin + double(k) * lat.spacing;
    const long j0 = long(std::ceil(c / h - 1e-9));
    const long j1 = long(std::floor((c + S / scale) / h + 1e-9));
    Band& bd = bands[k];
    for (long j = j0; j <= j1; ++j) {
      const double u = scale * (double(j) * h - c);
      double v = b.profile(p.wavelet, u);
      for (int m = 0; m < p.moment; ++m) v *= u;
      if (v == 0.0) continue;
      long jj = j;
      if (lat.periodic) {
        jj %= long(n_grid);
        if (jj < 0) jj += long(n_grid);
      } else if (jj < 0 || jj >= long(n_grid)) {
        continue;
      }
      auto it = std::find(bd.j.begin(), bd.j.end(), std::size_t(jj));
      if (it == bd.j.end()) {
        bd.j.push_back(std::size_t(jj));
        bd.w.push_back(amp * v);
      } else {
        bd.w[it - bd.j.begin()] += amp * v;
      }
    }
  }
  return bands;
}

std::vector<double> apply_axis(const std::vector<double>& in, std::vector<std::size_t>& shape, std::size_t axis,
                               const std::vector<Band>& bands) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t n_in = shape[axis], n_out = bands.size();
  std::vector<double> out(outer * n_out * inner, 0.0);
  parallel_for(
      outer * n_out,
      [&](std::size_t ok) {
        const std::size_t o = ok / n_out, k = ok % n_out;
        double* dst = out.data() + (o * n_out + k) * inner;
        const Band& bd = bands[k];
        for (std::size_t q = 0; q < bd.j.size(); ++q) {
          const double* src = in.data() + (o * n_in + bd.j[q]) * inner;
          const double w = bd.w[q];
          for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
        }
      },
      16);
  shape[axis] = n_out;
  return out;
}

struct AxisGeom {
  double scale, h;
  std::size_t n_grid;
};

std::vector<AxisGeom> geometry(const Grid& grid, bool st, int n) {
  std::vector<AxisGeom> g;
  if (st) g.push_back({std::ldexp(1.0, 2 * n), grid.dt(), grid.M});
  for (int i = 0; i < grid.d; ++i) g.push_back({std::ldexp(1.0, n), grid.dx(), grid.N});
  return g;
}

std::vector<AxisGeom> geometry(const Field& f, int n) { return geometry(f.grid, f.kind != FieldKind::spatial, n); }

}  // namespace

std::vector<double> lattice_pairing(const Field& f, std::size_t channel, const WaveletBasis& b, int n,
                                    const std::vector<AxisProfile>& prof, const std::vector<LatticeAxis>& axes) {
  const auto geo = geometry(f, n);
  if (prof.size() != geo.size() || axes.size() != geo.size()) fail_validation("axis count mismatch in pairing");
  std::vector<std::size_t> shape = f.shape();
  const std::size_t per = f.slices() * f.grid.space_size();
  std::vector<double> cur(f.values.begin() + std::ptrdiff_t(channel * per),
                          f.values.begin() + std::ptrdiff_t((channel + 1) * per));
  for (std::size_t a = 0; a < geo.size(); ++a) {
    const auto bands = axis_bands(b, prof[a], geo[a].scale, geo[a].h, geo[a].n_grid, axes[a]);
    cur = apply_axis(cur, shape, a, bands);
  }
  return cur;
}

std::vector<double> lattice_synthesis(const std::vector<double>& coeffs, const Grid& g, FieldKind kind,
                                      const WaveletBasis& b, int n, const std::vector<LatticeAxis>& axes) {
  const auto geo = geometry(g, kind != FieldKind::spatial, n);
  if (axes.size() != geo.size()) fail_validation("axis count mismatch in synthesis");
  std::vector<std::size_t> shape;
  std::size_t total = 1;
  for (const auto& a : axes) shape.push_back(a.count), total *= a.count;
  if (coeffs.size() != total) fail_validation("coefficient count does not match the lattice");
  std::vector<double> cur = coeffs;
  for (std::size_t a = 0; a < geo.size(); ++a) {
    auto bands = axis_bands(b, {&b, false, 0}, geo[a].scale, geo[a].h, geo[a].n_grid, axes[a]);
    std::size_t outer = 1, inner = 1;
    for (std::size_t q = 0; q < a; ++q) outer *= shape[q];
    for (std::size_t q = a + 1; q < shape.size(); ++q) inner *= shape[q];
    const std::size_t n_lat = shape[a], n_out = geo[a].n_grid;
    std::vector<double> out(outer * n_out * inner, 0.0);
    // Scatter per outer row; rows are disjoint so the loop parallelizes safely.
    parallel_for(outer, [&](std::size_t o) {
      for (std::size_t k = 0; k < n_lat; ++k) {
        const double* src = cur.data() + (o * n_lat + k) * inner;
        const Band& bd = bands[k];
        for (std::size_t q = 0; q < bd.j.size(); ++q) {
          double* dst = out.data() + (o * n_out + bd.j[q]) * inner;
          const double w = bd.w[q] / geo[a].h;
          for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
        }
      }
    });
    shape[a] = n_out;
    cur = std::move(out);
  }
  return cur;
}

CoeffPyramid analyze(const Field& f, const WaveletBasis& b, int n_min, int n_max) {
  if (n_min < 0 || n_max < n_min) fail_validation("analyze: need 0 <= n_min <= n_max");
  const bool st = f.kind != FieldKind::spatial;
  if (f.kind == FieldKind::modelled) fail_validation("analyze expects a spatial or spacetime field");
  const double need = std::ldexp(1.0, -(n_max + 2));
  if (f.grid.dx() > need * (1 + 1e-12))
    fail_validation("analyze: grid spacing " + std::to_string(f.grid.dx()) + " too coarse for level " +
                    std::to_string(n_max) + "; need dx <= " + std::to_string(need));
  if (st && f.grid.dt() > need * need * (1 + 1e-12))
    fail_validation("analyze: time step too coarse for level " + std::to_string(n_max) + "; need dt <= " +
                    std::to_string(need * need));

  CoeffPyramid pyr;
  pyr.n_min = n_min;
  pyr.n_max = n_max;
  pyr.d = f.grid.d;
  pyr.spacetime = st;
  const std::size_t D = f.shape().size();

  for (int n = n_min; n <= n_max; ++n) {
    const auto axes = lattice_axes(f.grid, st, n, b.support());
    const auto geo = geometry(f, n);
    CoeffLevel lev;
    lev.n = n;
    lev.axes = axes;
    const std::size_t types = std::size_t(1) << D;
    lev.coeffs.assign(types - 1, {});
    std::vector<std::vector<Band>> bands[2];
    for (int w = 0; w < 2; ++w)
      for (std::size_t a = 0; a < D; ++a)
        bands[w].push_back(axis_bands(b, {&b, w == 1, 0}, geo[a].scale, geo[a].h, geo[a].n_grid, axes[a]));

    bool empty = false;
    for (const auto& ax : axes) empty |= ax.count == 0;
    std::vector<double> phi0;
    if (!empty) {
      // Depth-first over axes, sharing partial transforms between masks.
      auto rec = [&](auto&& self, std::size_t a, unsigned mask, std::vector<double> data,
                     std::vector<std::size_t> shape) -> void {
        if (a == D) {
          if (mask) lev.coeffs[mask - 1] = std::move(data);
          else phi0 = std::move(data);
          return;
        }
        for (unsigned w = 0; w < 2; ++w) {
          auto sh = shape;
          auto out = apply_axis(data, sh, a, bands[w][a]);
          self(self, a + 1, mask | (w << a), std::move(out), std::move(sh));
        }
      };
      rec(rec, 0, 0u, f.values, f.shape());
    } else {
      for (auto& c : lev.coeffs) c.clear();
    }
    if (n == n_min) {
      pyr.phi.n = n;
      pyr.phi.axes = axes;
      pyr.phi.coeffs = {phi0};
    }
    pyr.levels.push_back(std::move(lev));
  }
  return pyr;
}

namespace {

double trapezoid_product(const WaveletBasis& b, const std::vector<double>& f, const std::vector<double>& g, long shift) {
  const long total = long(f.size()) - 1;
  double s = 0.0;
  for (long i = 0; i <= total; ++i) {
    const long j = i - (shift << b.J);
    if (j >= 0 && j <= total) s += f[i] * g[j];
  }
  return s * std::ldexp(1.0, -b.J);
}

}  // namespace

std::vector<SelftestRow> wavelet_selftest(const WaveletBasis& b) {
  std::vector<SelftestRow> rows;
  const int S = b.support();
  double orth_pp = 0, orth_ss = 0, orth_ps = 0;
  for (long k = -S; k <= S; ++k) {
    const double d = k == 0 ? 1.0 : 0.0;
    if (k >= 0) {
      orth_pp = std::max(orth_pp, std::abs(trapezoid_product(b, b.phi_tab, b.phi_tab, k) - d));
      orth_ss = std::max(orth_ss, std::abs(trapezoid_product(b, b.psi_tab, b.psi_tab, k) - d));
    }
    orth_ps = std::max(orth_ps, std::abs(trapezoid_product(b, b.phi_tab, b.psi_tab, k)));
  }
  rows.push_back({"orthonormality_phi_phi", orth_pp, 1e-9});
  rows.push_back({"orthonormality_psi_psi", orth_ss, 1e-9});
  rows.push_back({"orthogonality_phi_psi", orth_ps, 1e-9});

  double asum = 0;
  for (double v : b.a) asum += v;
  rows.push_back({"refinement_coeff_sum", std::abs(asum - 2.0), 1e-12});

  // Refinement equation on every node where the right side is tabulated.
  double refine = 0;
  const long total = long(b.phi_tab.size()) - 1;
  for (long i = 0; i <= total; i += 2) {
    const double x = std::ldexp(double(i), -b.J);
    double s = 0;
    for (std::size_t k = 0; k < b.a.size(); ++k) s += b.a[k] * b.phi(2 * x - double(k));
    refine = std::max(refine, std::abs(b.phi(x) - s));
  }
  rows.push_back({"refinement_residual", refine, 1e-9});

  double annih = 0;
  for (int m = 0; m <= b.r; ++m) {
    double s = 0, sa = 0;
    for (long i = 0; i <= total; ++i) {
      const double x = std::ldexp(double(i), -b.J);
      s += b.psi_tab[i] * std::pow(x, m);
      sa += std::abs(b.psi_tab[i] * std::pow(x, m));
    }
    annih = std::max(annih, std::abs(s) / sa);
  }
  rows.push_back({"polynomial_annihilation", annih, 1e-8});

  // Partition of unity at 100 irregular points.
  double pou = 0;
  for (int q = 0; q < 100; ++q) {
    const double x = 0.1234567 + q * 0.0731;
    double s = 0;
    for (long k = long(std::floor(x)) - S; k <= long(std::floor(x)) + 1; ++k) s += b.phi(x - double(k));
    pou = std::max(pou, std::abs(s - 1.0));
  }
  rows.push_back({"polynomial_reproduction", pou, 1e-8});

  // Parseval on a band-limited periodic 1-d field.
  Grid g;
  g.d = 1;
  g.L = 1.0;
  g.N = 1024;
  Field f(g, FieldKind::spatial);
  double norm2 = 0;
  for (std::size_t j = 0; j < g.N; ++j) {
    const double x = double(j) * g.dx();
    const double v = std::sin(2 * std::numbers::pi * x) + 0.5 * std::cos(4 * std::numbers::pi * x) + 0.25;
    f.values[j] = v;
    norm2 += v * v * g.dx();
  }
  const auto pyr = analyze(f, b, 0, 7);
  rows.push_back({"parseval", std::abs(pyr.sum_squares() / norm2 - 1.0), 1e-4});

  // L2 norm of a rescaled parabolic tensor at level 3 by midpoint sums.
  {
    const int n = 3;
    const double ht = std::ldexp(1.0, -2 * n - 10), hx = std::ldexp(1.0, -n - 10);
    double s = 0;
    const long nt = long(S) << 10, nx = long(S) << 10;
    std::vector<double> pt(nt + 1), px(nx + 1);
    for (long i = 0; i <= nt; ++i) pt[i] = rescaled(b, n, true, 0u, {0.0}, {double(i) * ht});
    for (long i = 0; i <= nx; ++i) px[i] = std::sqrt(std::ldexp(1.0, n)) * b.phi(std::ldexp(1.0, n) * i * hx);
    double st = 0, sx = 0;
    for (double v : pt) st += v * v * ht;
    for (double v : px) sx += v * v * hx;
    s = st * sx;
    rows.push_back({"rescaled_l2_norm", std::abs(s - 1.0), 1e-6});
  }
  return rows;
}

}  // namespace she
