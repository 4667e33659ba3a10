#include "she/reconstruct.hpp"

#include "she/error.hpp"
#include "she/fft.hpp"
#include "she/noise.hpp"
#include "she/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

namespace she {

namespace {

std::vector<std::string> split_star(const std::string& s) {
  std::vector<std::string> out;
  std::size_t b = 0;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    if (s[i] == ')') --depth;
    if (s[i] == '*' && depth == 0) {
      out.push_back(s.substr(b, i - b));
      b = i + 1;
    }
  }
  out.push_back(s.substr(b));
  return out;
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

bool exact_ratio(double a, double b, long& q) {
  const double r = a / b;
  q = std::lround(r);
  return q >= 1 && std::abs(r - double(q)) < 1e-9 * std::max(1.0, r);
}

std::size_t flat_space(const std::vector<std::size_t>& j, std::size_t N) {
  std::size_t i = 0;
  for (std::size_t v : j) i = i * N + v;
  return i;
}

// Moments int u^i phi(u) du from phi(u) = sum_k a_k phi(2u - k).
std::vector<double> phi_moments(const WaveletBasis& b, int top) {
  std::vector<double> mu(std::size_t(top) + 1, 0.0);
  mu[0] = 1.0;
  for (int j = 1; j <= top; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < b.a.size(); ++k)
      for (int i = 0; i < j; ++i) s += b.a[k] * binom(j, i) * std::pow(double(k), j - i) * mu[std::size_t(i)];
    mu[std::size_t(j)] = std::ldexp(s, -j - 1) / (1.0 - std::ldexp(1.0, -j));
  }
  return mu;
}

}  // namespace

SymbolPtr parse_symbol(const std::string& name, int d) {
  if (name == "1") return make_one();
  if (name == "Xi") return make_xi();
  if (name == "I(Xi)") return make_integral(make_xi());
  if (name.rfind("Xi*", 0) == 0) return make_xi_product(parse_symbol(name.substr(3), d));
  std::vector<int> k(std::size_t(d) + 1, 0);
  for (const auto& tok : split_star(name)) {
    if (tok.size() < 2 || tok[0] != 'X') fail_validation("unknown symbol '" + name + "'");
    int a = -1;
    try {
      std::size_t used = 0;
      a = std::stoi(tok.substr(1), &used);
      if (used != tok.size() - 1) a = -1;
    } catch (const std::exception&) {
      a = -1;
    }
    if (a < 0 || a > d) fail_validation("bad monomial factor '" + tok + "' in '" + name + "'");
    ++k[std::size_t(a)];
  }
  return make_monomial(k);
}

Model::Model(const Grid& g, std::vector<SymbolPtr> symbols, double kappa)
    : grid_(g), kappa_(kappa), sym_(std::move(symbols)) {
  if (g.M < 2) fail_validation("model grid needs at least two time slices");
  classify();
  for (Kind k : kinds_)
    if (k != Kind::one && k != Kind::poly) fail_validation("noise symbols need a canonical model built from a field");
}

Model Model::canonical(const Field& xi, const KernelDecomposition& dec, std::vector<SymbolPtr> symbols, double kappa) {
  if (xi.kind != FieldKind::spacetime) fail_validation("canonical model expects a spacetime field");
  if (dec.d() != xi.grid.d) fail_validation("kernel decomposition dimension differs from the field");
  if (xi.grid.M < 2) fail_validation("model grid needs at least two time slices");
  Model m;
  m.grid_ = xi.grid;
  m.kappa_ = kappa;
  m.sym_ = std::move(symbols);
  m.classify();
  m.xi_ = xi;
  if (std::any_of(m.kinds_.begin(), m.kinds_.end(), [](Kind k) { return k == Kind::i_xi || k == Kind::xi_i_xi; }))
    m.kxi_ = convolve_singular_kernel(xi, dec);
  return m;
}

void Model::classify() {
  const int d = grid_.d;
  kinds_.clear();
  deg_.clear();
  for (const auto& s : sym_) {
    MultiIndex k(std::size_t(d) + 1, 0);
    Kind kind;
    switch (s->kind) {
      case Symbol::Kind::One: kind = Kind::one; break;
      case Symbol::Kind::Xi: kind = Kind::xi; break;
      case Symbol::Kind::Monomial:
        kind = Kind::poly;
        k = s->k;
        break;
      case Symbol::Kind::Integral:
        if (s->children[0]->kind != Symbol::Kind::Xi) fail_validation("symbol " + s->repr + " is outside the model");
        kind = Kind::i_xi;
        break;
      case Symbol::Kind::Product: {
        const auto& c = *s->children[1];
        if (c.kind == Symbol::Kind::Monomial) {
          kind = Kind::xi_poly;
          k = c.k;
        } else if (c.kind == Symbol::Kind::Integral && c.children[0]->kind == Symbol::Kind::Xi) {
          kind = Kind::xi_i_xi;
        } else {
          fail_validation("symbol " + s->repr + " is outside the model");
        }
        break;
      }
      default: fail_validation("symbol " + s->repr + " is outside the model");
    }
    if (k.size() != std::size_t(d) + 1) fail_validation("monomial dimension differs from the grid in " + s->repr);
    kinds_.push_back(kind);
    deg_.push_back(k);
  }
  // Closure under re-expansion.
  auto find = [&](Kind kind, const MultiIndex& k) {
    for (std::size_t i = 0; i < kinds_.size(); ++i) {
      const bool zero = std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
      if (kind == Kind::poly && zero && kinds_[i] == Kind::one) return true;
      if (kind == Kind::xi_poly && zero && kinds_[i] == Kind::xi) return true;
      if (kinds_[i] == kind && deg_[i] == k) return true;
    }
    return false;
  };
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < sym_.size(); ++i) {
    if (seen[sym_[i]->repr]++) fail_validation("duplicate symbol " + sym_[i]->repr);
    if (kinds_[i] == Kind::poly || kinds_[i] == Kind::xi_poly) {
      for (const auto& l : multi_indices(d, parabolic_degree(deg_[i]))) {
        bool below = true;
        for (std::size_t a = 0; a < l.size(); ++a) below &= l[a] <= deg_[i][a];
        if (below && l != deg_[i] && !find(kinds_[i], l))
          fail_validation("symbol set is not closed under re-expansion (needed by " + sym_[i]->repr + ")");
      }
    }
    if (kinds_[i] == Kind::i_xi && !find(Kind::one, MultiIndex(std::size_t(d) + 1, 0)))
      fail_validation("I(Xi) needs the unit symbol");
    if (kinds_[i] == Kind::xi_i_xi && !find(Kind::xi, MultiIndex(std::size_t(d) + 1, 0)))
      fail_validation("Xi*I(Xi) needs Xi");
  }
}

std::vector<std::string> Model::names() const {
  std::vector<std::string> n;
  for (const auto& s : sym_) n.push_back(s->repr);
  return n;
}

std::size_t Model::index(const std::string& repr) const {
  for (std::size_t i = 0; i < sym_.size(); ++i)
    if (sym_[i]->repr == repr) return i;
  fail_validation("symbol " + repr + " is not part of the model");
}

double Model::homogeneity(std::size_t i) const { return sym_.at(i)->hom.value(kappa_); }

std::vector<double> Model::position(const Node& z) const {
  std::vector<double> p{double(z.k) * grid_.dt()};
  for (std::size_t v : z.j) p.push_back(double(v) * grid_.dx());
  return p;
}

std::vector<double> Model::displacement(const Node& from, const Node& to) const {
  std::vector<double> r{(double(to.k) - double(from.k)) * grid_.dt()};
  const long N = long(grid_.N);
  for (std::size_t a = 0; a < from.j.size(); ++a) {
    long o = (long(to.j[a]) - long(from.j[a])) % N;
    if (o < 0) o += N;
    if (o > N / 2) o -= N;
    r.push_back(double(o) * grid_.dx());
  }
  return r;
}

double Model::value(const Field& f, const Node& z) const {
  return f.values[z.k * grid_.space_size() + flat_space(z.j, grid_.N)];
}

double Model::pi(std::size_t tau, const Node& z, const Node& w) const {
  auto mono = [&](const MultiIndex& k) {
    const auto r = displacement(z, w);
    double v = 1.0;
    for (std::size_t a = 0; a < k.size(); ++a) v *= std::pow(r[a], k[a]);
    return v;
  };
  switch (kinds_.at(tau)) {
    case Kind::one: return 1.0;
    case Kind::poly: return mono(deg_[tau]);
    case Kind::xi: return value(xi_, w);
    case Kind::xi_poly: return value(xi_, w) * mono(deg_[tau]);
    case Kind::i_xi: return value(kxi_, w) - value(kxi_, z);
    case Kind::xi_i_xi: return value(xi_, w) * (value(kxi_, w) - value(kxi_, z));
  }
  return 0.0;
}

std::vector<double> Model::gamma(const Node& z, const Node& zp) const {
  const std::size_t S = sym_.size();
  std::vector<double> G(S * S, 0.0);
  const auto delta = displacement(zp, z);  // z - z'
  auto lower = [&](Kind kind, const MultiIndex& l) -> std::size_t {
    const bool zero = std::all_of(l.begin(), l.end(), [](int v) { return v == 0; });
    for (std::size_t i = 0; i < S; ++i) {
      if (zero && kind == Kind::poly && kinds_[i] == Kind::one) return i;
      if (zero && kind == Kind::xi_poly && kinds_[i] == Kind::xi) return i;
      if (kinds_[i] == kind && deg_[i] == l) return i;
    }
    return S;
  };
  for (std::size_t j = 0; j < S; ++j) {
    switch (kinds_[j]) {
      case Kind::one:
      case Kind::xi: G[j * S + j] = 1.0; break;
      case Kind::poly:
      case Kind::xi_poly: {
        const auto& k = deg_[j];
        for (const auto& l : multi_indices(grid_.d, parabolic_degree(k))) {
          double c = 1.0;
          for (std::size_t a = 0; a < k.size() && c != 0.0; ++a)
            c = l[a] > k[a] ? 0.0 : c * binom(k[a], l[a]) * std::pow(delta[a], k[a] - l[a]);
          if (c == 0.0) continue;
          G[lower(kinds_[j], l) * S + j] += c;
        }
        break;
      }
      case Kind::i_xi:
        G[j * S + j] = 1.0;
        G[lower(Kind::poly, MultiIndex(std::size_t(grid_.d) + 1, 0)) * S + j] = value(kxi_, z) - value(kxi_, zp);
        break;
      case Kind::xi_i_xi:
        G[j * S + j] = 1.0;
        G[lower(Kind::xi_poly, MultiIndex(std::size_t(grid_.d) + 1, 0)) * S + j] = value(kxi_, z) - value(kxi_, zp);
        break;
    }
  }
  return G;
}

std::vector<double> Model::apply_gamma(const Node& z, const Node& zp, const std::vector<double>& c) const {
  const std::size_t S = sym_.size();
  const auto G = gamma(z, zp);
  std::vector<double> out(S, 0.0);
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < S; ++j) out[i] += G[i * S + j] * c[j];
  return out;
}

Field convolve_singular_kernel(const Field& xi, const KernelDecomposition& dec) {
  const Grid& g = xi.grid;
  const int d = g.d;
  const std::size_t n = g.space_size(), M = g.M;
  const double dt = g.dt(), dx = g.dx();
  const std::size_t lags = std::min<std::size_t>(M - 1, std::size_t(std::floor(1.0 / dt + 1e-9)));
  RealFFT fft(d, g.N);
  const std::size_t nc = fft.complex_size();

  std::vector<std::complex<double>> kh(lags * nc), xh(M * nc);
  std::vector<double> slab(n);
  const double vol = dt * std::pow(dx, d);
  for (std::size_t l = 1; l <= lags; ++l) {
    std::vector<double> z(std::size_t(d) + 1);
    z[0] = double(l) * dt;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = i;
      for (int a = d; a >= 1; --a) {
        long o = long(r % g.N);
        r /= g.N;
        if (o > long(g.N) / 2) o -= long(g.N);
        z[std::size_t(a)] = double(o) * dx;
      }
      slab[i] = vol * dec.Pplus(z.data());
    }
    fft.forward(slab.data(), kh.data() + (l - 1) * nc);
  }
  for (std::size_t k = 0; k < M; ++k) fft.forward(xi.slice(k), xh.data() + k * nc);

  std::vector<std::complex<double>> oh(M * nc);
  parallel_for(M, [&](std::size_t k) {
    std::complex<double>* o = oh.data() + k * nc;
    for (std::size_t l = 1; l <= std::min(k, lags); ++l) {
      const auto* a = kh.data() + (l - 1) * nc;
      const auto* b = xh.data() + (k - l) * nc;
      for (std::size_t q = 0; q < nc; ++q) o[q] += a[q] * b[q];
    }
  });
  Field out(g, FieldKind::spacetime);
  for (std::size_t k = 0; k < M; ++k) {
    fft.backward(oh.data() + k * nc, out.slice(k));
    for (std::size_t i = 0; i < n; ++i) out.slice(k)[i] /= double(n);
  }
  return out;
}

ModelledDistribution ModelledDistribution::zeros(const Model& m, double gamma, double p) {
  ModelledDistribution f;
  f.symbols = m.names();
  f.gamma = gamma;
  f.p = p;
  f.coeffs = Field(m.grid(), FieldKind::modelled, m.size());
  return f;
}

std::vector<double> ModelledDistribution::at(const Node& z) const {
  const std::size_t n = coeffs.grid.space_size(), i = z.k * n + flat_space(z.j, coeffs.grid.N);
  const std::size_t per = coeffs.grid.M * n;
  std::vector<double> c(symbols.size());
  for (std::size_t s = 0; s < c.size(); ++s) c[s] = coeffs.values[s * per + i];
  return c;
}

double& ModelledDistribution::coeff(std::size_t sym, const Node& z) {
  const std::size_t n = coeffs.grid.space_size();
  return coeffs.values[sym * coeffs.grid.M * n + z.k * n + flat_space(z.j, coeffs.grid.N)];
}

void write_modelled(const std::string& path, const ModelledDistribution& f) {
  write_field(path, f.coeffs);
  nlohmann::json j;
  j["symbols"] = f.symbols;
  j["gamma"] = f.gamma;
  if (std::isinf(f.p)) j["p"] = "inf";
  else j["p"] = f.p;
  std::ofstream os(path + ".json");
  if (!os) fail_io("cannot write " + path + ".json");
  os << j.dump(2) << "\n";
}

ModelledDistribution read_modelled(const std::string& path) {
  ModelledDistribution f;
  f.coeffs = read_field(path);
  std::ifstream is(path + ".json");
  if (!is) fail_io("missing symbol sidecar " + path + ".json");
  nlohmann::json j;
  try {
    is >> j;
    f.symbols = j.at("symbols").get<std::vector<std::string>>();
    f.gamma = j.value("gamma", 1.0);
    if (j.contains("p") && j["p"].is_string()) {
      if (j["p"] != "inf") fail_validation("p must be a number or \"inf\"");
      f.p = std::numeric_limits<double>::infinity();
    } else {
      f.p = j.value("p", 2.0);
    }
  } catch (const nlohmann::json::exception& e) {
    fail_io(std::string("bad symbol sidecar: ") + e.what());
  }
  if (f.coeffs.kind != FieldKind::modelled) fail_validation("modelled distribution file has the wrong field kind");
  if (f.coeffs.channels != f.symbols.size()) fail_validation("sidecar symbol count differs from the channel count");
  return f;
}

namespace {

struct LevelGeom {
  double sp_t, sp_x;
  long rt, rx;  // lattice spacing in grid steps
};

LevelGeom level_geom(const Grid& g, int n) {
  LevelGeom lg{std::ldexp(1.0, -2 * n), std::ldexp(1.0, -n), 0, 0};
  if (!exact_ratio(lg.sp_t, g.dt(), lg.rt))
    fail_validation("time step must divide 2^{-2n} for level " + std::to_string(n));
  if (!exact_ratio(lg.sp_x, g.dx(), lg.rx))
    fail_validation("grid spacing must divide 2^{-n} for level " + std::to_string(n));
  return lg;
}

std::vector<double> scales(int n, int d) {
  std::vector<double> s{std::ldexp(1.0, 2 * n)};
  for (int a = 0; a < d; ++a) s.push_back(std::ldexp(1.0, n));
  return s;
}

// Index of a multi-index inside the list of needed moments.
std::size_t moment_slot(std::vector<MultiIndex>& list, const MultiIndex& i) {
  auto it = std::find(list.begin(), list.end(), i);
  if (it != list.end()) return std::size_t(it - list.begin());
  list.push_back(i);
  return list.size() - 1;
}

}  // namespace

ReconstructionState reconstruct(const ModelledDistribution& f, const Model& m, const WaveletBasis& b, int n_min,
                                int n_max) {
  const Grid& g = m.grid();
  const int d = g.d;
  if (n_min < 0 || n_max < n_min) fail_validation("reconstruct: need 0 <= n_min <= n_max");
  if (f.coeffs.grid != g || f.coeffs.kind != FieldKind::modelled)
    fail_validation("modelled distribution does not live on the model grid");
  if (f.coeffs.channels != f.symbols.size()) fail_validation("channel count differs from the symbol count");
  std::vector<std::size_t> map;  // f symbol -> model symbol
  for (const auto& s : f.symbols) map.push_back(m.index(s));
  bool noisy = false;
  for (std::size_t s : map) noisy |= m.kind(s) != Model::Kind::one && m.kind(s) != Model::Kind::poly;
  if (noisy) {
    const double need = std::ldexp(1.0, -(n_max + 2));
    if (g.dx() > need * (1 + 1e-12) || g.dt() > need * need * (1 + 1e-12))
      fail_validation("noise pairings at level " + std::to_string(n_max) + " need dx <= 2^-(n+2) and dt <= 4^-(n+2)");
  }

  ReconstructionState st;
  st.n_min = n_min;
  st.n_max = n_max;
  st.d = d;
  st.shift_constant = b.shift_constant();
  const long C = std::lround(st.shift_constant);
  const double S = b.support();
  st.t_begin = double(C) * std::ldexp(1.0, -2 * n_min);
  const double t_last = double(g.M - 1) * g.dt();

  int top = 0;
  for (std::size_t s : map)
    for (int v : m.degree(s)) top = std::max(top, v);
  const auto mu = phi_moments(b, top);

  const std::size_t ns = g.space_size();
  const std::size_t per = g.M * ns;
  Field xkx;
  for (std::size_t s : map)
    if (m.kind(s) == Model::Kind::xi_i_xi && xkx.values.empty()) {
      xkx = m.xi();
      for (std::size_t i = 0; i < xkx.values.size(); ++i) xkx.values[i] *= m.k_xi().values[i];
    }

  for (int n = n_min; n <= n_max; ++n) {
    const LevelGeom lg = level_geom(g, n);
    long base_off;
    if (!exact_ratio(st.t_begin, g.dt(), base_off)) fail_validation("time window start is not a grid time");
    const double span = t_last - st.t_begin;
    const double cnt = std::floor(span / lg.sp_t + 1e-9) - S + 1;
    if (cnt < 1) fail_validation("time span too short for level " + std::to_string(n) + " after the shift t - C 4^-n");
    ReconLevel lev;
    lev.n = n;
    lev.axes.push_back({lg.sp_t, st.t_begin, std::size_t(cnt), false});
    const double cx = g.L / lg.sp_x;
    for (int a = 0; a < d; ++a) lev.axes.push_back({lg.sp_x, 0.0, std::size_t(std::llround(cx)), true});
    const std::size_t nt = lev.axes[0].count, nx = std::size_t(std::llround(std::pow(cx, d)));
    const auto sc = scales(n, d);
    double m0 = 1.0;
    for (double s : sc) m0 /= std::sqrt(s);

    // Pairings of the noise-built functions with phi^n_c (and moments).
    std::vector<MultiIndex> moments;
    std::vector<std::vector<double>> Q;
    std::vector<double> QK, QXK;
    if (noisy) {
      for (std::size_t s : map) {
        const auto k = m.kind(s);
        if (k == Model::Kind::xi || k == Model::Kind::xi_i_xi) moment_slot(moments, MultiIndex(std::size_t(d) + 1, 0));
        if (k == Model::Kind::xi_poly)
          for (const auto& i : multi_indices(d, parabolic_degree(m.degree(s)))) {
            bool below = true;
            for (std::size_t a = 0; a < i.size(); ++a) below &= i[a] <= m.degree(s)[a];
            if (below) moment_slot(moments, i);
          }
      }
      for (const auto& i : moments) {
        std::vector<AxisProfile> prof;
        double fac = 1.0;
        for (std::size_t a = 0; a < i.size(); ++a) {
          prof.push_back({&b, false, i[a]});
          fac *= std::pow(sc[a], -i[a]);
        }
        auto q = lattice_pairing(m.xi(), 0, b, n, prof, lev.axes);
        for (double& v : q) v *= fac;
        Q.push_back(std::move(q));
      }
      const std::vector<AxisProfile> plain(std::size_t(d) + 1, AxisProfile{&b, false, 0});
      for (std::size_t s : map) {
        if (m.kind(s) == Model::Kind::i_xi && QK.empty()) QK = lattice_pairing(m.k_xi(), 0, b, n, plain, lev.axes);
        if (m.kind(s) == Model::Kind::xi_i_xi && QXK.empty()) QXK = lattice_pairing(xkx, 0, b, n, plain, lev.axes);
      }
    }
    std::vector<std::size_t> slot(map.size(), 0);
    std::vector<std::vector<std::pair<std::size_t, double>>> xi_terms(map.size());

    // Ball weights: trapezoid on [-rx, rx] per axis, normalized to an average.
    const long rx = lg.rx;
    std::vector<double> w1(std::size_t(2 * rx + 1), 1.0);
    w1.front() = w1.back() = 0.5;
    const double w1sum = double(2 * rx);
    std::size_t ball = 1;
    for (int a = 0; a < d; ++a) ball *= w1.size();

    lev.A.assign(nt * nx, 0.0);
    parallel_for(nt * nx, [&](std::size_t idx) {
      const std::size_t it = idx / nx, ixf = idx % nx;
      std::vector<long> ix(static_cast<std::size_t>(d));
      std::size_t r = ixf;
      for (int a = d - 1; a >= 0; --a) {
        ix[std::size_t(a)] = long(r % lev.axes[std::size_t(a) + 1].count);
        r /= lev.axes[std::size_t(a) + 1].count;
      }
      const std::size_t kb = std::size_t(base_off + long(it) * lg.rt - C * lg.rt);
      const double dtime = double(C) * lg.sp_t;  // c_t - z_t
      double acc = 0.0;
      std::vector<double> disp(std::size_t(d) + 1);
      disp[0] = dtime;
      std::vector<long> o(std::size_t(d), -rx);
      for (std::size_t q = 0; q < ball; ++q) {
        std::size_t rr = q;
        double w = 1.0;
        std::size_t node = 0;
        for (int a = d - 1; a >= 0; --a) {
          const long oa = long(rr % w1.size()) - rx;
          rr /= w1.size();
          o[std::size_t(a)] = oa;
          w *= w1[std::size_t(oa + rx)] / w1sum;
        }
        for (int a = 0; a < d; ++a) {
          long jj = (ix[std::size_t(a)] * rx + o[std::size_t(a)]) % long(g.N);
          if (jj < 0) jj += long(g.N);
          node = node * g.N + std::size_t(jj);
          disp[std::size_t(a) + 1] = -double(o[std::size_t(a)]) * g.dx();
        }
        const std::size_t gi = kb * ns + node;
        double val = 0.0;
        for (std::size_t s = 0; s < map.size(); ++s) {
          const double fz = f.coeffs.values[s * per + gi];
          if (fz == 0.0) continue;
          const std::size_t ms = map[s];
          const auto& k = m.degree(ms);
          double pz = 0.0;
          switch (m.kind(ms)) {
            case Model::Kind::one: pz = m0; break;
            case Model::Kind::poly: {
              pz = m0;
              for (std::size_t a = 0; a < k.size(); ++a) {
                double t = 0.0;
                for (int i = 0; i <= k[a]; ++i)
                  t += binom(k[a], i) * std::pow(disp[a], k[a] - i) * std::pow(sc[a], -i) * mu[std::size_t(i)];
                pz *= t;
              }
              break;
            }
            case Model::Kind::xi: pz = Q[0][idx]; break;
            case Model::Kind::xi_poly: {
              for (std::size_t mi = 0; mi < moments.size(); ++mi) {
                const auto& i = moments[mi];
                double c = 1.0;
                for (std::size_t a = 0; a < k.size() && c != 0.0; ++a)
                  c = i[a] > k[a] ? 0.0 : c * binom(k[a], i[a]) * std::pow(disp[a], k[a] - i[a]);
                if (c != 0.0) pz += c * Q[mi][idx];
              }
              break;
            }
            case Model::Kind::i_xi: pz = QK[idx] - m.k_xi().values[gi] * m0; break;
            case Model::Kind::xi_i_xi: pz = QXK[idx] - m.k_xi().values[gi] * Q[0][idx]; break;
          }
          val += fz * pz;
        }
        acc += w * val;
      }
      lev.A[idx] = acc;
    });
    st.levels.push_back(std::move(lev));
  }

  // delta A^n = <f_{n+1}, phi^n> - A^n through the two-scale relation.
  const std::size_t taps = b.h.size();
  std::vector<double> h2(3 * (taps - 1) + 1, 0.0);
  for (std::size_t k = 0; k < taps; ++k)
    for (std::size_t l = 0; l < taps; ++l) h2[2 * k + l] += b.h[k] * b.h[l];
  for (std::size_t li = 0; li + 1 < st.levels.size(); ++li) {
    ReconLevel& lev = st.levels[li];
    const ReconLevel& up = st.levels[li + 1];
    const std::size_t nt = lev.axes[0].count;
    const std::size_t nx = lev.A.size() / nt, nxu = up.A.size() / up.axes[0].count;
    const std::size_t cx = lev.axes.size() > 1 ? lev.axes[1].count : 1;
    std::size_t sp_taps = 1;
    for (int a = 0; a < d; ++a) sp_taps *= taps;
    lev.dA.assign(lev.A.size(), 0.0);
    parallel_for(lev.A.size(), [&](std::size_t idx) {
      const std::size_t it = idx / nx;
      std::vector<std::size_t> ix(static_cast<std::size_t>(d));
      std::size_t r = idx % nx;
      for (int a = d - 1; a >= 0; --a) ix[std::size_t(a)] = r % cx, r /= cx;
      double s = 0.0;
      for (std::size_t mt = 0; mt < h2.size(); ++mt) {
        const std::size_t tu = 4 * it + mt;
        if (tu >= up.axes[0].count) fail_numerical("refinement reaches outside the time window");
        for (std::size_t q = 0; q < sp_taps; ++q) {
          std::size_t rr = q, xu = 0;
          double w = h2[mt];
          std::vector<std::size_t> mx(static_cast<std::size_t>(d));
          for (int a = d - 1; a >= 0; --a) mx[std::size_t(a)] = rr % taps, rr /= taps;
          for (int a = 0; a < d; ++a) {
            w *= b.h[mx[std::size_t(a)]];
            xu = xu * (2 * cx) + (2 * ix[std::size_t(a)] + mx[std::size_t(a)]) % (2 * cx);
          }
          s += w * up.A[tu * nxu + xu];
        }
      }
      lev.dA[idx] = s - lev.A[idx];
    });
  }

  const ReconLevel& fin = st.levels.back();
  st.output = Field(g, FieldKind::spacetime);
  st.output.values = lattice_synthesis(fin.A, g, FieldKind::spacetime, b, n_max, fin.axes);
  const double sp = fin.axes[0].spacing;
  st.valid_begin = st.t_begin + (S - 1) * sp;
  st.valid_end = st.t_begin + double(fin.axes[0].count - 1) * sp;
  return st;
}

std::vector<double> project_field(const Field& g, const WaveletBasis& b, const ReconLevel& lev) {
  const std::vector<AxisProfile> plain(lev.axes.size(), AxisProfile{&b, false, 0});
  return lattice_pairing(g, 0, b, lev.n, plain, lev.axes);
}

double level_norm(const ReconLevel& lev, const std::vector<double>& c, double beta, double p, int d) {
  const std::size_t nt = lev.axes[0].count;
  if (nt == 0 || c.empty()) return 0.0;
  const std::size_t nx = c.size() / nt;
  const int n = lev.n;
  const double scale = std::pow(2.0, n * (2.0 + d) / 2.0 + n * beta);
  const double vol = std::ldexp(1.0, -n * d);
  double best = 0.0;
  for (std::size_t t = 0; t < nt; ++t) {
    double s = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      const double v = std::abs(c[t * nx + x]) * scale;
      if (std::isinf(p)) s = std::max(s, v);
      else s += vol * std::pow(v, p);
    }
    best = std::max(best, std::isinf(p) ? s : std::pow(s, 1.0 / p));
  }
  return best;
}

namespace {

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

}  // namespace

SewingReport sewing_check(const ReconstructionState& st, double alpha, double gamma, double p) {
  if (st.levels.size() < 4) fail_validation("sewing check needs at least 4 levels");
  SewingReport rep;
  std::vector<double> na, la, nd, ld, lp;
  for (const auto& lev : st.levels) {
    SewingLevel sl;
    sl.n = lev.n;
    sl.a_term = level_norm(lev, lev.A, alpha, p, st.d);
    if (!lev.dA.empty()) {
      sl.da_term = level_norm(lev, lev.dA, gamma, p, st.d);
      sl.da_plain = level_norm(lev, lev.dA, 0.0, p, st.d);
    }
    rep.sup_a = std::max(rep.sup_a, sl.a_term);
    rep.sup_da = std::max(rep.sup_da, sl.da_term);
    if (sl.a_term > 0.0) na.push_back(lev.n), la.push_back(std::log2(sl.a_term));
    if (!lev.dA.empty() && sl.da_term > 0.0) {
      nd.push_back(lev.n);
      ld.push_back(std::log2(sl.da_term));
      lp.push_back(std::log2(sl.da_plain));
    }
    rep.levels.push_back(sl);
  }
  rep.slope_a = na.size() >= 2 ? fit_slope(na, la) : 0.0;
  rep.slope_da = nd.size() >= 2 ? fit_slope(nd, ld) : 0.0;
  rep.rate = nd.size() >= 2 ? -fit_slope(nd, lp) : std::numeric_limits<double>::quiet_NaN();
  rep.stable_a = rep.slope_a <= kSewingGrowthTol;
  rep.stable_da = rep.slope_da <= kSewingGrowthTol;
  auto argmax = [&](bool delta) {
    int best = -1;
    double v = -1.0;
    for (const auto& sl : rep.levels) {
      const double t = delta ? sl.da_term : sl.a_term;
      if (t > v) v = t, best = sl.n;
    }
    return best;
  };
  if (!rep.stable_da) rep.violation_level = argmax(true);
  else if (!rep.stable_a) rep.violation_level = argmax(false);
  return rep;
}

DGammaReport dgamma_norm(const ModelledDistribution& f, const Model& m, double gamma, double p,
                         std::size_t max_times) {
  const Grid& g = m.grid();
  const int d = g.d;
  if (f.coeffs.grid != g || f.coeffs.kind != FieldKind::modelled)
    fail_validation("modelled distribution does not live on the model grid");
  if (f.symbols != m.names()) fail_validation("dgamma_norm: symbols must match the model order");
  const std::size_t S = m.size(), ns = g.space_size();

  // Homogeneity classes below gamma.
  std::vector<double> zetas;
  std::vector<int> cls(S, -1);
  for (std::size_t s = 0; s < S; ++s) {
    const double z = m.homogeneity(s);
    if (z >= gamma) continue;
    auto it = std::find_if(zetas.begin(), zetas.end(), [&](double v) { return std::abs(v - z) < 1e-12; });
    if (it == zetas.end()) {
      cls[s] = int(zetas.size());
      zetas.push_back(z);
    } else {
      cls[s] = int(it - zetas.begin());
    }
  }
  std::vector<double> lambdas;
  std::vector<long> lx, lt;
  for (int j = 2; j <= 6; ++j) {
    const double lam = std::ldexp(1.0, -j);
    long qx, qt;
    if (exact_ratio(lam, g.dx(), qx) && exact_ratio(lam * lam, g.dt(), qt) && qt < long(g.M)) {
      lambdas.push_back(lam);
      lx.push_back(qx);
      lt.push_back(qt);
    }
  }
  if (lambdas.empty()) fail_validation("grid resolves none of the scales 2^-2..2^-6");

  auto node_of = [&](std::size_t k, std::size_t flat) {
    Node z;
    z.k = k;
    z.j.resize(std::size_t(d));
    for (int a = d - 1; a >= 0; --a) z.j[std::size_t(a)] = flat % g.N, flat /= g.N;
    return z;
  };
  auto class_norms = [&](const std::vector<double>& v) {
    std::vector<double> q(zetas.size(), 0.0);
    for (std::size_t s = 0; s < S; ++s)
      if (cls[s] >= 0) q[std::size_t(cls[s])] += v[s] * v[s];
    for (double& x : q) x = std::sqrt(x);
    return q;
  };
  const double cell = std::pow(g.dx(), d);
  auto finish = [&](const std::vector<double>& acc) {
    double best = 0.0;
    for (double a : acc) best = std::max(best, std::isinf(p) ? a : std::pow(cell * a, 1.0 / p));
    return best;
  };
  auto add = [&](std::vector<double>& acc, const std::vector<double>& q, double lam) {
    for (std::size_t c = 0; c < q.size(); ++c) {
      const double v = lam > 0.0 ? q[c] / std::pow(lam, gamma - zetas[c]) : q[c];
      acc[c] = std::isinf(p) ? std::max(acc[c], v) : acc[c] + std::pow(v, p);
    }
  };

  std::vector<std::size_t> times;
  const std::size_t stride = std::max<std::size_t>(1, (g.M + max_times - 1) / std::max<std::size_t>(1, max_times));
  for (std::size_t k = 0; k < g.M; k += stride) times.push_back(k);

  DGammaReport rep;
  std::vector<double> part1(times.size()), part2(times.size()), part3(times.size());
  parallel_for(times.size(), [&](std::size_t ti) {
    const std::size_t k = times[ti];
    std::vector<double> acc1(zetas.size(), 0.0);
    for (std::size_t x = 0; x < ns; ++x) add(acc1, class_norms(f.at(node_of(k, x))), 0.0);
    part1[ti] = finish(acc1);
    double t2 = 0.0, t3 = 0.0;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const long r = lx[li];
      std::vector<double> acc2(zetas.size(), 0.0), acc3(zetas.size(), 0.0);
      std::vector<double> w1(std::size_t(2 * r + 1), 1.0);
      w1.front() = w1.back() = 0.5;
      std::size_t ball = 1;
      for (int a = 0; a < d; ++a) ball *= w1.size();
      const bool has_past = long(k) >= lt[li];
      for (std::size_t x = 0; x < ns; ++x) {
        const Node zx = node_of(k, x);
        const auto fx = f.at(zx);
        std::vector<double> avg(zetas.size(), 0.0);
        for (std::size_t q = 0; q < ball; ++q) {
          std::size_t rr = q;
          double w = 1.0;
          Node zy = zx;
          for (int a = d - 1; a >= 0; --a) {
            const long o = long(rr % w1.size()) - r;
            rr /= w1.size();
            w *= w1[std::size_t(o + r)] / double(2 * r);
            long jj = (long(zx.j[std::size_t(a)]) + o) % long(g.N);
            if (jj < 0) jj += long(g.N);
            zy.j[std::size_t(a)] = std::size_t(jj);
          }
          auto diff = f.at(zy);
          const auto moved = m.apply_gamma(zy, zx, fx);
          for (std::size_t s = 0; s < S; ++s) diff[s] -= moved[s];
          const auto qn = class_norms(diff);
          for (std::size_t c = 0; c < qn.size(); ++c) avg[c] += w * qn[c];
        }
        add(acc2, avg, lambdas[li]);
        if (has_past) {
          Node zp = zx;
          zp.k = k - std::size_t(lt[li]);
          auto diff = fx;
          const auto moved = m.apply_gamma(zx, zp, f.at(zp));
          for (std::size_t s = 0; s < S; ++s) diff[s] -= moved[s];
          add(acc3, class_norms(diff), lambdas[li]);
        }
      }
      t2 = std::max(t2, finish(acc2));
      if (has_past) t3 = std::max(t3, finish(acc3));
    }
    part2[ti] = t2;
    part3[ti] = t3;
  });
  for (std::size_t i = 0; i < times.size(); ++i) {
    rep.pointwise = std::max(rep.pointwise, part1[i]);
    rep.space = std::max(rep.space, part2[i]);
    rep.time = std::max(rep.time, part3[i]);
  }
  rep.value = std::max({rep.pointwise, rep.space, rep.time});
  return rep;
}

std::vector<double> model_bound(const Model& m, std::size_t tau, const std::vector<Node>& z,
                                const std::vector<double>& lambdas) {
  const Grid& g = m.grid();
  const int d = g.d;
  Mollifier eta;
  std::vector<double> out;
  for (double lam : lambdas) {
    const long rt = long(std::floor(lam * lam / g.dt())), rx = long(std::floor(lam / g.dx()));
    if (rt < 2 || rx < 2) fail_validation("grid does not resolve lambda = " + std::to_string(lam));
    double best = 0.0;
    for (const Node& c : z) {
      if (long(c.k) < rt || c.k + std::size_t(rt) >= g.M)
        fail_validation("test function at lambda = " + std::to_string(lam) + " leaves the time range");
      double s = 0.0;
      std::size_t box = 1;
      for (int a = 0; a < d; ++a) box *= std::size_t(2 * rx + 1);
      for (long ot = -rt; ot <= rt; ++ot) {
        const double et = eta.bump(double(ot) * g.dt() / (lam * lam)) / (lam * lam);
        if (et == 0.0) continue;
        Node w;
        w.k = std::size_t(long(c.k) + ot);
        w.j.resize(static_cast<std::size_t>(d));
        for (std::size_t q = 0; q < box; ++q) {
          std::size_t rr = q;
          double e = et;
          for (int a = d - 1; a >= 0; --a) {
            const long o = long(rr % std::size_t(2 * rx + 1)) - rx;
            rr /= std::size_t(2 * rx + 1);
            e *= eta.bump(double(o) * g.dx() / lam) / lam;
            long jj = (long(c.j[std::size_t(a)]) + o) % long(g.N);
            if (jj < 0) jj += long(g.N);
            w.j[std::size_t(a)] = std::size_t(jj);
          }
          if (e != 0.0) s += e * m.pi(tau, c, w);
        }
      }
      best = std::max(best, std::abs(s * g.dt() * std::pow(g.dx(), d)));
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace she
