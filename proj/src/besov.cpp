#include "she/besov.hpp"

#include "she/error.hpp"

#include <algorithm>
#include <cmath>

namespace she {

double WeightFamily::operator()(double t, double r, double zeta) const {
  const double q = 1.0 + r;
  switch (kind) {
    case Kind::none: return 1.0;
    case Kind::polynomial: return std::pow(q, a);
    case Kind::exponential: return std::exp(ell * q);
    case Kind::model: return std::pow(q, c / 28.0 * (1.0 - kappa));
    case Kind::solution1: return std::pow(q, c / 14.0 * zeta) * std::exp((t + ell) * q);
    case Kind::solution2: return std::pow(q, c / 14.0 * (zeta + 3.0)) * std::exp((t + ell) * q);
    case Kind::custom: return fn(t, r, zeta);
  }
  return 1.0;
}

double WeightFamily::log_value(double t, double r, double zeta) const {
  const double lq = std::log1p(r);
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::polynomial: return a * lq;
    case Kind::exponential: return ell * (1.0 + r);
    case Kind::model: return c / 28.0 * (1.0 - kappa) * lq;
    case Kind::solution1: return c / 14.0 * zeta * lq + (t + ell) * (1.0 + r);
    case Kind::solution2: return c / 14.0 * (zeta + 3.0) * lq + (t + ell) * (1.0 + r);
    case Kind::custom: return std::log(fn(t, r, zeta));
  }
  return 0.0;
}

std::string WeightFamily::name() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::polynomial: return "polynomial";
    case Kind::exponential: return "exponential";
    case Kind::model: return "model";
    case Kind::solution1: return "solution1";
    case Kind::solution2: return "solution2";
    case Kind::custom: return "custom";
  }
  return "none";
}

WeightFamily WeightFamily::polynomial(double a) {
  WeightFamily w;
  w.kind = Kind::polynomial;
  w.a = a;
  return w;
}
WeightFamily WeightFamily::exponential(double ell) {
  WeightFamily w;
  w.kind = Kind::exponential;
  w.ell = ell;
  return w;
}
WeightFamily WeightFamily::model(double c, double kappa) {
  WeightFamily w;
  w.kind = Kind::model;
  w.c = c;
  w.kappa = kappa;
  return w;
}
WeightFamily WeightFamily::solution(int i, double c, double kappa, double ell) {
  WeightFamily w;
  w.kind = i == 1 ? Kind::solution1 : Kind::solution2;
  w.c = c;
  w.kappa = kappa;
  w.ell = ell;
  return w;
}
WeightFamily WeightFamily::custom(std::function<double(double, double, double)> f) {
  WeightFamily w;
  w.kind = Kind::custom;
  w.fn = std::move(f);
  return w;
}

namespace {

// Distance of a lattice point to the box centre.
double lattice_radius(const CoeffLevel& lev, std::size_t flat, bool spacetime, double L, double* tout) {
  const std::size_t D = lev.axes.size();
  std::vector<std::size_t> idx(D);
  for (std::size_t a = D; a-- > 0;) {
    idx[a] = flat % lev.axes[a].count;
    flat /= lev.axes[a].count;
  }
  double r2 = 0.0;
  std::size_t a0 = 0;
  if (spacetime) {
    *tout = double(idx[0]) * lev.axes[0].spacing;
    a0 = 1;
  }
  for (std::size_t a = a0; a < D; ++a) {
    const double x = double(idx[a]) * lev.axes[a].spacing - 0.5 * L;
    r2 += x * x;
  }
  return std::sqrt(r2);
}

double level_term(const CoeffLevel& lev, const std::vector<double>& c, int n, const CoeffPyramid& pyr,
                  const BesovParams& bp, const WeightFamily& w, double L) {
  const std::size_t nt = pyr.spacetime ? lev.axes[0].count : 1;
  if (nt == 0 || c.empty()) return 0.0;
  const std::size_t nx = c.size() / nt;
  const double vol = std::ldexp(1.0, -n * pyr.d);
  const double norm = std::pow(2.0, -n * (0.5 * pyr.scaling_sum() + bp.alpha));
  const bool weighted = w.kind != WeightFamily::Kind::none;
  double best = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    double s = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      double v = std::abs(c[t * nx + x]) / norm;
      if (weighted) {
        double tt = 0.0;
        const double r = lattice_radius(lev, t * nx + x, pyr.spacetime, L, &tt);
        v /= w(tt, r);
      }
      if (std::isinf(bp.p)) s = std::max(s, v);
      else s += vol * std::pow(v, bp.p);
    }
    best = std::max(best, std::isinf(bp.p) ? s : std::pow(s, 1.0 / bp.p));
  }
  return best;
}

}  // namespace

std::vector<double> besov_level_terms(const CoeffPyramid& pyr, const BesovParams& bp, const WeightFamily& w,
                                      const Grid* grid) {
  if (pyr.levels.empty()) fail_validation("besov_norm: empty pyramid");
  if (!(bp.p >= 1.0)) fail_validation("besov_norm: p must be >= 1");
  const bool weighted = w.kind != WeightFamily::Kind::none;
  if (weighted && !grid) fail_validation("besov_norm: weighted norm needs the field grid");
  const double L = grid ? grid->L : 0.0;
  std::vector<double> out;
  out.push_back(level_term(pyr.phi, pyr.phi.coeffs.at(0), pyr.n_min, pyr, bp, w, L));
  for (const auto& lev : pyr.levels) {
    double m = 0.0;
    for (const auto& c : lev.coeffs) m = std::max(m, level_term(lev, c, lev.n, pyr, bp, w, L));
    out.push_back(m);
  }
  return out;
}

double besov_norm(const CoeffPyramid& pyr, const BesovParams& bp, const WeightFamily& w, const Grid* grid) {
  const auto terms = besov_level_terms(pyr, bp, w, grid);
  return terms[0] + *std::max_element(terms.begin() + 1, terms.end());
}

WeightCheck check_weight(const WeightFamily& w, double box_radius, double t, double zeta) {
  auto estimate = [&](double R) {
    double worst = 0.0;
    const int nx = 256, ny = 41;
    for (int i = 0; i < nx; ++i) {
      const double x = i == 0 ? 0.0 : std::exp(std::log(R) * double(i) / (nx - 1)) - 1.0 + 1e-12;
      const double lx = w.log_value(t, std::abs(x), zeta);
      for (int j = 0; j < ny; ++j) {
        const double y = x - 1.0 + 2.0 * double(j) / (ny - 1);
        const double lr = lx - w.log_value(t, std::abs(y), zeta);
        if (!std::isfinite(lr)) return std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::abs(lr));
      }
    }
    return std::exp(worst);
  };
  WeightCheck wc;
  wc.C_est = estimate(box_radius + 1.0);
  wc.C_est_enlarged = estimate(2.0 * box_radius + 1.0);
  wc.ok = std::isfinite(wc.C_est_enlarged) && wc.C_est_enlarged <= wc.C_est * (1.0 + 1e-6);
  return wc;
}

std::vector<WRow> check_assumption_W(double c, double kappa, double T, double ell, int d, W5Reading reading) {
  if (!(c > 0.0)) fail_validation("check-w: c must be positive");
  const StructureParams sp{kappa, d};
  const auto st = build_structure(StructureParams{0.01, d});
  const double alpha = sp.alpha().value(kappa);
  const double gamma_p = sp.gamma().value(kappa) + alpha + 2.0 - c;
  const std::string interp = reading == W5Reading::strict ? "strict" : "extend_by_equality";

  std::vector<double> zU;  // homogeneities of U below gamma'
  for (const auto& s : st.U) {
    const double z = s->hom.value(kappa);
    if (z < gamma_p && std::find(zU.begin(), zU.end(), z) == zU.end()) zU.push_back(z);
  }
  // Parabolic degrees |k| < gamma'.
  std::vector<int> kdeg;
  for (int k = 0; k < gamma_p; ++k) kdeg.push_back(k);

  const auto wP = WeightFamily::model(c, kappa);
  const WeightFamily w[2] = {WeightFamily::solution(1, c, kappa, ell), WeightFamily::solution(2, c, kappa, ell)};
  // log-weight of tau*Xi: that of tau, or the formula at |tau|+alpha.
  auto lwF = [&](int i, double t, double r, double ztau) {
    return w[i].log_value(t, r, reading == W5Reading::strict ? ztau + alpha : ztau);
  };
  std::vector<double> zA = zU;
  if (reading == W5Reading::strict)
    for (double z : zU) zA.push_back(z + alpha);

  std::vector<double> xs;
  for (int i = 0; i < 64; ++i) xs.push_back(std::exp(std::log(1e3 + 1.0) * i / 63.0) - 1.0);
  std::vector<double> ts;
  for (int i = 0; i < 4; ++i) ts.push_back(T - double(i) * (T + 1.0) / 3.0);
  std::vector<std::pair<double, double>> pairs;  // (s, t)
  for (double t : ts)
    for (double gap : {1e-3, 1e-2, 1e-1, 1.0}) pairs.emplace_back(t - gap, t);

  std::vector<WRow> rows;
  auto add = [&](const std::string& name, double m, double K, bool pass) {
    rows.push_back({name, interp, m, K, pass});
  };
  constexpr double tol = 1e-12;

  {
    double K = 1.0;
    for (int i = 0; i < 2; ++i)
      for (double z : zA)
        for (double t : ts) K = std::max(K, check_weight(w[i], 1e3, t, z).C_est_enlarged);
    add("W-0", std::log(K), K, std::isfinite(K));
  }
  {
    double m = -kInf;
    for (int i = 0; i < 2; ++i)
      for (double z : zA)
        for (auto [s, t] : pairs)
          for (double x : xs) m = std::max(m, w[i].log_value(s, x, z) - w[i].log_value(t, x, z));
    add("increasing_in_time", m, 0.0, m <= tol);
  }
  // W-1: sup_x wP^2 w_s / w_t <= K (t-s)^{-c/2}; K must be stable under enlarging the x range.
  {
    auto logK = [&](double xmax) {
      double K = -kInf;
      for (int i = 0; i < 2; ++i)
        for (double z : zA)
          for (auto [s, t] : pairs)
            for (int q = 0;; ++q) {
              const double x = std::exp(std::log(101.0) * q / 255.0) - 1.0;
              if (x > xmax * (1.0 + 1e-12)) break;
              double lwt = kInf;
              for (int j = 0; j < 2; ++j)
                for (double zz : zA) lwt = std::min(lwt, w[j].log_value(t, x, zz));
              const double lhs = 2.0 * wP.log_value(0, x) + w[i].log_value(s, x, z) - lwt;
              K = std::max(K, lhs + c / 2.0 * std::log(t - s));
            }
      return K;
    };
    const double K1 = logK(1e2), K2 = logK(1e3);
    add("W-1", K2 - K1, std::exp(K2), std::isfinite(K2) && K2 <= K1 + 1e-9);
  }
  {
    double m = -kInf;
    for (int i = 0; i < 2; ++i)
      for (double z : zU)
        for (double t : ts)
          for (double x : xs) m = std::max(m, w[i].log_value(t, x, z) - w[i].log_value(t, x, z + alpha + 2.0));
    add("W-2", m, 0.0, m <= tol);
  }
  {
    double m = -kInf;
    for (int i = 0; i < 2; ++i)
      for (double z : zU)
        for (int k : kdeg) {
          if (z + alpha > k - 2 + tol) continue;
          for (double t : ts)
            for (double x : xs)
              m = std::max(m, wP.log_value(t, x) + lwF(i, t, x, z) - w[i].log_value(t, x, double(k)));
        }
    add("W-3", m, 0.0, m <= tol);
  }
  {
    double m = -kInf;
    for (double z : zU)
      for (int k : kdeg)
        for (double t : ts)
          for (double x : xs) m = std::max(m, wP.log_value(t, x) + lwF(0, t, x, z) - w[1].log_value(t, x, double(k)));
    add("W-4", m, 0.0, m <= tol);
  }
  {
    double m = 0.0;
    for (int i = 0; i < 2; ++i)
      for (double z : zU)
        for (double t : ts)
          for (double x : xs) m = std::max(m, std::abs(lwF(i, t, x, z) - w[i].log_value(t, x, z)));
    add("W-5", m, 0.0, m <= tol);
  }
  return rows;
}

bool dirac_membership(int d, double p, double eta) {
  if (!(p >= 1.0)) fail_validation("dirac_membership: p must be >= 1");
  const double edge = std::isinf(p) ? -double(d) : -double(d) + double(d) / p;
  return eta < edge;
}

DiracNorms dirac_besov_norms(int d, double p, double eta, const WaveletBasis& b, const std::vector<int>& resolutions) {
  DiracNorms out;
  const int n_min = 1;
  for (int J : resolutions) {
    Grid g;
    g.d = d;
    g.L = 2.0;
    g.N = std::size_t(1) << (J + 1);
    Field f(g, FieldKind::spatial);
    std::size_t centre = 0;
    for (int a = 0; a < d; ++a) centre = centre * g.N + g.N / 2;
    f.values[centre] = std::pow(g.dx(), -d);
    const auto pyr = analyze(f, b, n_min, J - 2);
    out.resolutions.push_back(J);
    out.norms.push_back(besov_norm(pyr, {eta, p, b.r}));
  }
  const std::size_t m = out.norms.size();
  if (m >= 2) out.growth = std::log2(out.norms[m - 1] / out.norms[m - 2]);
  out.bounded = out.growth <= 0.05;
  return out;
}

}  // namespace she
