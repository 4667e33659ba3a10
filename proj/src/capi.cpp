#include "she/she.h"

#include "she/besov.hpp"
#include "she/error.hpp"
#include "she/field.hpp"
#include "she/kernel.hpp"
#include "she/noise.hpp"
#include "she/parallel.hpp"
#include "she/reconstruct.hpp"
#include "she/renorm.hpp"
#include "she/solver.hpp"
#include "she/structure.hpp"
#include "she/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

struct she_config {
  std::vector<std::pair<std::string, std::string>> items;
};

struct she_table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct she_result {
  std::vector<std::unique_ptr<she_table>> tables;
  std::vector<std::pair<std::string, she::Field>> fields;
};

namespace {

thread_local std::string g_error;

she_status fail(she_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
she_status guarded(F&& f) {
  try {
    g_error.clear();
    f();
    return SHE_OK;
  } catch (const she::Error& e) {
    return fail(static_cast<she_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SHE_ERR_NUMERICAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SHE_ERR_VALIDATION, e.what());
  }
}

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

// Table builder with typed cells.
class Table {
public:
  Table(std::string name, std::vector<std::string> header) : t_(std::make_unique<she_table>()) {
    t_->name = std::move(name);
    t_->header = std::move(header);
  }
  Table& row() {
    t_->rows.emplace_back();
    return *this;
  }
  Table& operator<<(double v) { return put(fmt(v)); }
  Table& operator<<(int v) { return put(std::to_string(v)); }
  Table& operator<<(long v) { return put(std::to_string(v)); }
  Table& operator<<(unsigned long long v) { return put(std::to_string(v)); }
  Table& operator<<(std::size_t v) { return put(std::to_string(v)); }
  Table& operator<<(bool v) { return put(v ? "true" : "false"); }
  Table& operator<<(const std::string& v) { return put(v); }
  Table& operator<<(const char* v) { return put(v); }
  std::unique_ptr<she_table> release() { return std::move(t_); }

private:
  Table& put(std::string s) {
    t_->rows.back().push_back(std::move(s));
    return *this;
  }
  std::unique_ptr<she_table> t_;
};

// Resolved options of one command.
class Opts {
public:
  explicit Opts(const she_config& c) {
    for (const auto& [k, v] : c.items) map_[k] = v;
  }
  const std::string& str(const std::string& k) const {
    auto it = map_.find(k);
    if (it == map_.end()) she::fail_validation("missing option '" + k + "'");
    return it->second;
  }
  double num(const std::string& k) const { return parse_num(k, str(k)); }
  long integer(const std::string& k) const {
    const double v = num(k);
    if (v != std::floor(v) || std::abs(v) > 9.0e15) she::fail_validation("option '" + k + "' must be an integer");
    return long(v);
  }
  std::size_t count(const std::string& k) const {
    const long v = integer(k);
    if (v < 0) she::fail_validation("option '" + k + "' must be non-negative");
    return std::size_t(v);
  }
  bool flag(const std::string& k) const {
    const std::string& v = str(k);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    she::fail_validation("option '" + k + "' must be true or false");
  }
  std::vector<double> list(const std::string& k) const {
    std::vector<double> out;
    for (const auto& s : split(str(k), ','))
      if (!s.empty()) out.push_back(parse_num(k, s));
    return out;
  }
  bool empty(const std::string& k) const { return str(k).empty(); }

  static double parse_num(const std::string& k, const std::string& s) {
    if (s == "inf") return she::kInf;
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size() || !std::isfinite(v))
      she::fail_validation("option '" + k + "' expects a number, got '" + s + "'");
    return v;
  }

private:
  std::map<std::string, std::string> map_;
};

struct Key {
  const char* name;
  const char* def;
  const char* help;
};

using Runner = std::function<void(const Opts&, she_result&)>;

struct Command {
  const char* name;
  std::vector<Key> keys;
  Runner run;
};

she::Grid parse_grid(const Opts& o, const std::string& key, int d) {
  const auto v = o.list(key);
  if (v.size() != 4) she::fail_validation("option '" + key + "' expects N,M,L,T");
  for (int i : {0, 1})
    if (v[i] < 0 || v[i] != std::floor(v[i])) she::fail_validation("option '" + key + "': N and M must be integers");
  she::Grid g;
  g.d = d;
  g.N = std::size_t(v[0]);
  g.M = std::size_t(v[1]);
  g.L = v[2];
  g.T = v[3];
  if (g.N < 2 || !(g.L > 0.0)) she::fail_validation("option '" + key + "': need N >= 2 and L > 0");
  if (g.T < 0.0) she::fail_validation("option '" + key + "': T must be non-negative");
  return g;
}

she::FieldKind parse_kind(const std::string& s) {
  if (s == "spacetime") return she::FieldKind::spacetime;
  if (s == "spatial") return she::FieldKind::spatial;
  she::fail_validation("kind must be spacetime or spatial, got '" + s + "'");
}

she::WeightFamily parse_weight(const std::string& s) {
  if (s == "none") return she::WeightFamily::none();
  const auto colon = s.find(':');
  const std::string head = s.substr(0, colon);
  if (colon == std::string::npos) she::fail_validation("weight must be none, poly:<a> or exp:<ell>");
  const double v = Opts::parse_num("weight", s.substr(colon + 1));
  if (head == "poly") return she::WeightFamily::polynomial(v);
  if (head == "exp") return she::WeightFamily::exponential(v);
  she::fail_validation("weight must be none, poly:<a> or exp:<ell>");
}

void add_field_summary(she_result& r, const std::string& name, const she::Field& f) {
  double mean = 0.0, sq = 0.0, lo = she::kInf, hi = -she::kInf;
  for (double v : f.values) {
    mean += v;
    sq += v * v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double n = double(f.values.size());
  Table t(name, {"kind", "d", "N", "M", "L", "T", "values", "mean", "variance", "min", "max"});
  const char* kind = f.kind == she::FieldKind::spatial ? "spatial" : f.kind == she::FieldKind::spacetime ? "spacetime"
                                                                                                        : "modelled";
  t.row() << kind << f.grid.d << f.grid.N << f.grid.M << f.grid.L << f.grid.T << f.values.size() << mean / n
          << sq / n - (mean / n) * (mean / n) << lo << hi;
  r.tables.push_back(t.release());
}

void run_structure(const Opts& o, she_result& r) {
  she::StructureParams p;
  p.kappa = o.num("kappa");
  p.d = int(o.integer("d"));
  if (!(p.kappa > 0.0 && p.kappa < 0.125)) she::fail_validation("kappa must lie in (0, 1/8)");
  if (p.d < 1 || p.d > 3) she::fail_validation("d must be 1, 2 or 3");
  const auto s = she::build_structure(p);
  Table t("structure", {"set", "symbol", "q", "m", "value"});
  for (const auto& [set, list] : {std::pair{"U", &s.U}, std::pair{"F", &s.F}})
    for (const auto& sym : *list)
      t.row() << set << sym->repr << she::to_string(sym->hom.q) << sym->hom.m << sym->hom.value(p.kappa);
  r.tables.push_back(t.release());
}

void run_kernel(const Opts& o, she_result& r) {
  const auto c = she::kernel_check(int(o.integer("d")), int(o.integer("r")), o.count("points"),
                                   std::uint64_t(o.count("seed")), int(o.integer("nmax")));
  Table t("kernel", {"check", "value", "tolerance", "pass"});
  t.row() << "reassembly" << c.reassembly << she::kReassemblyTol << (c.reassembly < she::kReassemblyTol);
  t.row() << "scaling" << c.scaling << 1e-12 << (c.scaling < 1e-12);
  t.row() << "support_violations" << double(c.support_violations) << 0.0 << (c.support_violations == 0);
  for (std::size_t i = 0; i < c.moment.size(); ++i) {
    std::string k = "moment_";
    for (std::size_t a = 0; a < c.moment_index[i].size(); ++a) k += (a ? "," : "(") + std::to_string(c.moment_index[i][a]);
    t.row() << k + ")" << c.moment[i] << she::kMomentTol << (c.moment[i] < she::kMomentTol);
  }
  r.tables.push_back(t.release());
}

void run_wavelet(const Opts& o, she_result& r) {
  const auto b = she::build_basis(int(o.integer("r")));
  Table t("wavelet", {"check", "residual", "tolerance", "pass"});
  for (const auto& row : she::wavelet_selftest(b)) t.row() << row.check << row.residual << row.tolerance << (row.residual < row.tolerance);
  r.tables.push_back(t.release());
}

void run_besov_norm(const Opts& o, she_result& r) {
  const she::Field f = she::read_field(o.str("input"));
  if (f.kind == she::FieldKind::modelled) she::fail_validation("besov norm expects a spatial or spacetime field");
  she::BesovParams bp;
  bp.alpha = o.num("alpha");
  bp.p = o.num("p");
  bp.r = int(o.integer("r"));
  if (!(bp.p >= 1.0)) she::fail_validation("p must be >= 1");
  const auto b = she::build_basis(bp.r);
  const int n_min = int(o.integer("n_min"));
  int n_max = int(o.integer("n_max"));
  if (n_max < 0) {
    n_max = int(std::floor(std::log2(1.0 / f.grid.dx()))) - 2;
    if (f.kind == she::FieldKind::spacetime) n_max = std::min(n_max, int(std::floor(std::log2(1.0 / f.grid.dt()) / 2.0)) - 2);
    n_max = std::max(n_min, n_max);
  }
  const auto pyr = she::analyze(f, b, n_min, n_max);
  const auto w = parse_weight(o.str("weight"));
  const double norm = she::besov_norm(pyr, bp, w, &f.grid);
  Table t("besov", {"alpha", "p", "r", "weight", "n_min", "n_max", "norm"});
  t.row() << bp.alpha << bp.p << bp.r << w.name() << n_min << n_max << norm;
  r.tables.push_back(t.release());
}

void run_besov_check_w(const Opts& o, she_result& r) {
  const std::string reading = o.str("reading");
  she::W5Reading rd;
  if (reading == "extend_by_equality") rd = she::W5Reading::extend_by_equality;
  else if (reading == "strict") rd = she::W5Reading::strict;
  else she::fail_validation("reading must be extend_by_equality or strict");
  const auto rows = she::check_assumption_W(o.num("c"), o.num("kappa"), o.num("T"), o.num("ell"), int(o.integer("d")), rd);
  Table t("check_w", {"condition", "interpretation", "worst_margin", "K_est", "pass"});
  for (const auto& w : rows) t.row() << w.condition << w.interpretation << w.worst_margin << w.K_est << w.pass;
  r.tables.push_back(t.release());
}

void run_noise_sample(const Opts& o, she_result& r) {
  const auto kind = parse_kind(o.str("kind"));
  she::Grid g = parse_grid(o, "grid", int(o.integer("d")));
  if (g.d < 1 || g.d > 3) she::fail_validation("d must be 1, 2 or 3");
  if (kind == she::FieldKind::spatial) g.M = 0, g.T = 0.0;
  else if (g.M == 0 || !(g.T > 0.0)) she::fail_validation("spacetime noise needs M > 0 and T > 0");
  auto f = she::sample_white_noise(g, kind, std::uint64_t(o.count("seed")));
  add_field_summary(r, "noise", f);
  r.fields.emplace_back("noise", std::move(f));
}

void run_noise_mollify(const Opts& o, she_result& r) {
  const she::Field f = she::read_field(o.str("input"));
  she::Mollifier m;
  m.eps = o.num("eps");
  m.sharpness = o.num("sharpness");
  m.spacetime = f.kind == she::FieldKind::spacetime;
  m.d = f.grid.d;
  auto out = she::mollify(f, m);
  add_field_summary(r, "mollified", out);
  r.fields.emplace_back("mollified", std::move(out));
}

void run_noise_regularity(const Opts& o, she_result& r) {
  const auto kind = parse_kind(o.str("kind"));
  const int d = int(o.integer("d"));
  const int n_min = int(o.integer("n_min")), n_max = int(o.integer("n_max")), refine = int(o.integer("refine"));
  if (d < 1 || d > 3) she::fail_validation("d must be 1, 2 or 3");
  if (refine < 1 || n_max + refine > 24) she::fail_validation("refine must be >= 1 and n_max + refine <= 24");
  she::Grid g;
  g.d = d;
  g.L = o.num("L");
  const double cells = g.L * std::ldexp(1.0, n_max + refine);
  if (cells != std::floor(cells)) she::fail_validation("L * 2^(n_max+refine) must be an integer");
  g.N = std::size_t(cells);
  if (kind == she::FieldKind::spacetime) {
    g.T = o.num("T");
    const double slices = g.T * std::ldexp(1.0, 2 * (n_max + refine));
    if (!(slices >= 1.0) || slices != std::floor(slices)) she::fail_validation("T * 4^(n_max+refine) must be a positive integer");
    g.M = std::size_t(slices);
  }
  const auto b = she::build_basis(int(o.integer("r")));
  const std::size_t seeds = o.count("seeds");
  if (seeds < 2) she::fail_validation("regularity needs at least 2 seeds");
  const std::uint64_t seed0 = o.count("seed");
  const double p = o.num("p");
  Table per("regularity_per_seed", {"seed", "alpha"});
  std::vector<double> alphas;
  const double half = (kind == she::FieldKind::spacetime ? 2 + d : d) / 2.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto f = she::sample_white_noise(g, kind, seed0 + s);
    alphas.push_back(-half - she::regularity_slope(f, p, b, n_min, n_max));
    per.row() << std::uint64_t(seed0 + s) << alphas.back();
  }
  const auto est = she::summarize_regularity(alphas, seed0);
  Table t("regularity", {"kind", "d", "seeds", "n_min", "n_max", "alpha_hat", "ci_lo", "ci_hi", "expected", "regular"});
  const double expected = kind == she::FieldKind::spacetime ? -(2.0 + d) / 2.0 : -d / 2.0;
  t.row() << o.str("kind") << d << seeds << n_min << n_max << est.alpha_hat << est.ci_lo << est.ci_hi << expected
          << est.regular;
  r.tables.push_back(t.release());
  r.tables.push_back(per.release());
}

she::QmcOptions qmc_from(const Opts& o) {
  she::QmcOptions q;
  q.samples = o.count("samples");
  q.max_samples = o.count("max_samples");
  if (q.max_samples == 0) q.max_samples = q.samples;
  q.replicates = int(o.integer("replicates"));
  q.seed = o.count("seed");
  q.rel_tol = o.num("rel_tol");
  q.abs_tol = o.num("abs_tol");
  if (q.samples < 2 || q.max_samples < q.samples) she::fail_validation("need 2 <= samples <= max_samples");
  if (q.replicates < 2) she::fail_validation("need at least 2 replicates");
  return q;
}

void run_renorm(const Opts& o, she_result& r) {
  const she::Equation eq = she::parse_equation(o.str("equation"));
  if (eq == she::Equation::pam2d) she::fail_validation("renorm supports pam3d and she1d");
  const auto q = qmc_from(o);
  const auto G = eq == she::Equation::pam3d ? she::GreenFn::pam3d(o.num("R_G")) : she::GreenFn::she1d();
  Table t("renorm", {"eps", "c", "c11", "c11_err", "c12", "c12_err", "C"});
  const auto eps = o.list("eps");
  if (eps.empty()) she::fail_validation("eps list is empty");
  for (double e : eps) {
    she::Mollifier m;
    m.eps = e;
    m.sharpness = o.num("sharpness");
    m.spacetime = she::equation_spacetime(eq);
    m.d = she::equation_dim(eq);
    const auto rc = she::renorm_constants(m, G, q);
    t.row() << e << rc.c << rc.c11.value << rc.c11.stderr_ << rc.c12.value.value << rc.c12.value.stderr_ << rc.C;
  }
  r.tables.push_back(t.release());
}

void run_reconstruct(const Opts& o, she_result& r) {
  const auto f = she::read_modelled(o.str("input"));
  const double kappa = o.num("kappa");
  std::vector<she::SymbolPtr> syms;
  for (const auto& s : f.symbols) syms.push_back(she::parse_symbol(s, f.coeffs.grid.d));
  bool noise = false;
  for (const auto& s : syms)
    if (s->kind == she::Symbol::Kind::Xi || s->kind == she::Symbol::Kind::Product) noise = true;
  she::Model model = [&] {
    if (!noise) return she::Model(f.coeffs.grid, syms, kappa);
    if (o.empty("xi")) she::fail_validation("symbols involve Xi; pass the noise field with xi=<path>");
    she::Field xi = she::read_field(o.str("xi"));
    if (xi.kind != she::FieldKind::spacetime) she::fail_validation("xi must be a spacetime field");
    const double eps = o.num("eps");
    if (eps > 0.0) {
      she::Mollifier m;
      m.eps = eps;
      m.d = xi.grid.d;
      xi = she::mollify(xi, m);
    }
    const she::KernelDecomposition dec(xi.grid.d, std::max(2, int(o.integer("kernel_r"))));
    return she::Model::canonical(xi, dec, syms, kappa);
  }();
  const auto b = she::build_basis(int(o.integer("r")));
  const int n_max = int(o.integer("nmax"));
  int n_min = int(o.integer("nmin"));
  if (n_min < 0) n_min = std::max(0, n_max - 3);
  const auto st = she::reconstruct(f, model, b, n_min, n_max);
  double alpha = she::kInf;
  for (std::size_t i = 0; i < model.size(); ++i) alpha = std::min(alpha, model.homogeneity(i));
  Table lv("sewing_levels", {"n", "a_term", "da_term", "da_plain"});
  Table sm("reconstruct", {"n_min", "n_max", "alpha", "gamma", "p", "sup_a", "sup_da", "slope_a", "slope_da", "stable_a",
                           "stable_da", "rate", "violation_level", "valid_begin", "valid_end"});
  if (n_max - n_min + 1 >= 4) {
    const auto rep = she::sewing_check(st, alpha, f.gamma, f.p);
    for (const auto& l : rep.levels) lv.row() << l.n << l.a_term << l.da_term << l.da_plain;
    sm.row() << n_min << n_max << alpha << f.gamma << f.p << rep.sup_a << rep.sup_da << rep.slope_a << rep.slope_da
             << rep.stable_a << rep.stable_da << rep.rate << rep.violation_level << st.valid_begin << st.valid_end;
  } else {
    const double nan = std::nan("");
    sm.row() << n_min << n_max << alpha << f.gamma << f.p << nan << nan << nan << nan << false << false << nan << -1
             << st.valid_begin << st.valid_end;
  }
  r.tables.push_back(sm.release());
  r.tables.push_back(lv.release());
  r.fields.emplace_back("reconstruction", st.output);
}

she::SolverConfig solver_config(const Opts& o) {
  she::SolverConfig c;
  c.equation = she::parse_equation(o.str("equation"));
  const she::Grid g = parse_grid(o, "grid", she::equation_dim(c.equation));
  c.grid.d = g.d;
  c.grid.N = g.N;
  c.grid.L = g.L;
  c.T = g.T;
  if (!(c.T > 0.0)) she::fail_validation("grid: T must be positive");
  c.dt = g.M ? g.T / double(g.M) : 0.0;
  const std::string ce = o.str("ceps");
  if (ce != "auto") c.C_eps = Opts::parse_num("ceps", ce);
  const std::string u0 = o.str("u0");
  if (u0 == "dirac") c.u0 = she::InitialCondition::dirac();
  else if (u0.rfind("const:", 0) == 0) c.u0 = she::InitialCondition::constant(Opts::parse_num("u0", u0.substr(6)));
  else if (u0.rfind("file:", 0) == 0) c.u0 = she::InitialCondition::from_field(she::read_field(u0.substr(5)));
  else she::fail_validation("u0 must be dirac, const:<c> or file:<path>");
  const std::string scheme = o.str("scheme");
  if (scheme == "exponential") c.scheme = she::Scheme::exponential_euler;
  else if (scheme == "semi_implicit") c.scheme = she::Scheme::semi_implicit;
  else she::fail_validation("scheme must be exponential or semi_implicit");
  c.seed = o.count("seed");
  c.snapshots = o.list("snapshots");
  c.ell = o.num("ell");
  c.R_G = o.num("R_G");
  c.sharpness = o.num("sharpness");
  return c;
}

void run_solve(const Opts& o, she_result& r) {
  she::SolverConfig c = solver_config(o);
  c.eps = o.num("eps");
  const auto tr = she::solve_renormalised(c);
  Table t("solve", {"t", "mass", "min", "max", "weighted_sup", "C_eps"});
  for (const auto& d : tr.diag) t.row() << d.t << d.mass << d.min << d.max << d.weighted_sup << tr.C_eps;
  r.tables.push_back(t.release());
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu", i);
    r.fields.emplace_back(name, tr.snapshots[i]);
  }
}

void run_converge(const Opts& o, she_result& r) {
  const she::SolverConfig c = solver_config(o);
  she::ConvergenceOptions co;
  co.eps_list = o.list("eps_list");
  co.p = o.num("p");
  co.ito = o.flag("ito");
  const std::uint64_t seed0 = o.count("seed");
  for (std::size_t s = 0; s < o.count("seeds"); ++s) co.seeds.push_back(seed0 + s);
  const auto rows = she::convergence_study(c, co);
  Table t("converge", {"seed", "eps_a", "eps_b", "distance"});
  for (const auto& row : rows) t.row() << row.seed << row.eps_a << row.eps_b << row.distance;
  r.tables.push_back(t.release());
}

const std::vector<Key> kQmcKeys = {
    {"samples", "16384", "QMC points per replicate"},
    {"max_samples", "0", "adaptive doubling limit (0: same as samples)"},
    {"replicates", "16", "randomised replicates"},
    {"rel_tol", "0.02", "relative stderr target"},
    {"abs_tol", "0.001", "absolute stderr target"},
};

std::vector<Key> with(std::vector<Key> a, const std::vector<Key>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

const std::vector<Key> kSolverKeys = {
    {"equation", "she1d", "pam2d, pam3d or she1d"},
    {"grid", "256,0,4,0.25", "N,M,L,T (M time steps, 0 for the default step)"},
    {"ceps", "auto", "renormalisation constant or auto"},
    {"u0", "const:1", "dirac, const:<c> or file:<path>"},
    {"scheme", "exponential", "exponential or semi_implicit"},
    {"seed", "1", "noise seed"},
    {"snapshots", "", "comma-separated output times (default T)"},
    {"ell", "1", "weight time offset"},
    {"R_G", "4", "PAM Green function truncation radius"},
    {"sharpness", "1", "mollifier bump sharpness"},
};

const std::vector<Command>& commands() {
  static const std::vector<Command> cmds = {
      {"structure table", {{"kappa", "0.01", "small parameter kappa"}, {"d", "3", "spatial dimension"}}, run_structure},
      {"kernel check",
       {{"d", "3", "spatial dimension"},
        {"r", "3", "moment order"},
        {"points", "1000", "reassembly test points"},
        {"seed", "1", "quasi-random offset"},
        {"nmax", "12", "deepest dyadic level"}},
       run_kernel},
      {"wavelet selftest", {{"r", "1", "regularity index"}}, run_wavelet},
      {"besov norm",
       {{"input", "", "field file"},
        {"alpha", "-1.5", "regularity exponent"},
        {"p", "2", "integrability (inf allowed)"},
        {"r", "2", "wavelet regularity index"},
        {"n_min", "0", "coarsest level"},
        {"n_max", "-1", "finest level (-1: resolution - 2)"},
        {"weight", "none", "none, poly:<a> or exp:<ell>"}},
       run_besov_norm},
      {"besov check-w",
       {{"c", "0.025", "weight parameter c"},
        {"kappa", "0.1", "small parameter kappa"},
        {"T", "1", "time horizon"},
        {"ell", "1", "weight time offset"},
        {"d", "1", "spatial dimension"},
        {"reading", "extend_by_equality", "extend_by_equality or strict"}},
       run_besov_check_w},
      {"noise sample",
       {{"kind", "spacetime", "spacetime or spatial"},
        {"d", "1", "spatial dimension"},
        {"grid", "64,1024,1,0.25", "N,M,L,T"},
        {"seed", "1", "noise seed"}},
       run_noise_sample},
      {"noise mollify",
       {{"input", "", "noise field file"}, {"eps", "0.1", "mollifier scale"}, {"sharpness", "1", "bump sharpness"}},
       run_noise_mollify},
      {"noise regularity",
       {{"kind", "spacetime", "spacetime or spatial"},
        {"d", "1", "spatial dimension"},
        {"L", "1", "box length"},
        {"T", "0.5", "time horizon"},
        {"n_min", "2", "coarsest analysed level"},
        {"n_max", "5", "finest analysed level"},
        {"refine", "3", "grid levels beyond n_max"},
        {"r", "1", "wavelet regularity index"},
        {"p", "2", "integrability"},
        {"seeds", "20", "number of realisations"},
        {"seed", "1", "first seed"}},
       run_noise_regularity},
      {"renorm",
       with({{"equation", "pam3d", "pam3d or she1d"},
             {"eps", "0.1", "comma-separated eps list"},
             {"seed", "1", "QMC seed"},
             {"R_G", "2", "PAM Green function truncation radius"},
             {"sharpness", "1", "mollifier bump sharpness"}},
            kQmcKeys),
       run_renorm},
      {"reconstruct",
       {{"input", "", "modelled distribution file"},
        {"nmax", "", "finest level"},
        {"nmin", "-1", "coarsest level (-1: nmax - 3)"},
        {"r", "1", "wavelet regularity index"},
        {"kappa", "0.01", "small parameter kappa"},
        {"xi", "", "spacetime noise field for Xi symbols"},
        {"eps", "0", "mollify xi at this scale first (0: as given)"},
        {"kernel_r", "2", "moment order of the kernel decomposition"}},
       run_reconstruct},
      {"solve", with({{"eps", "0.1", "mollifier scale"}}, kSolverKeys), run_solve},
      {"converge",
       with({{"eps_list", "0.2,0.1,0.05,0.025", "dyadic eps list"},
             {"seeds", "1", "number of seeds, starting at seed"},
             {"p", "2", "distance exponent"},
             {"ito", "true", "include the Ito reference (she1d)"}},
            kSolverKeys),
       run_converge},
  };
  return cmds;
}

const Command* find_command(const char* name) {
  if (!name) return nullptr;
  for (const auto& c : commands())
    if (name == std::string(c.name)) return &c;
  return nullptr;
}

}  // namespace

extern "C" {

const char* she_last_error(void) { return g_error.c_str(); }
const char* she_version(void) { return "1.0.0"; }
void she_set_threads(int n) { she::set_thread_count(n); }
int she_threads(void) { return she::thread_count(); }

size_t she_command_count(void) { return commands().size(); }
const char* she_command_name(size_t i) { return i < commands().size() ? commands()[i].name : nullptr; }
size_t she_command_key_count(const char* command) {
  const Command* c = find_command(command);
  return c ? c->keys.size() : 0;
}
const char* she_command_key(const char* command, size_t i) {
  const Command* c = find_command(command);
  return c && i < c->keys.size() ? c->keys[i].name : nullptr;
}
const char* she_command_key_default(const char* command, size_t i) {
  const Command* c = find_command(command);
  return c && i < c->keys.size() ? c->keys[i].def : nullptr;
}
const char* she_command_key_help(const char* command, size_t i) {
  const Command* c = find_command(command);
  return c && i < c->keys.size() ? c->keys[i].help : nullptr;
}

she_status she_config_new(she_config** out) {
  if (!out) return fail(SHE_ERR_VALIDATION, "null output pointer");
  return guarded([&] { *out = new she_config; });
}
void she_config_free(she_config* cfg) { delete cfg; }

she_status she_config_set(she_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(SHE_ERR_VALIDATION, "null argument");
  const std::string k = trim(key);
  if (k.empty() || k.find_first_of("=#\n") != std::string::npos) return fail(SHE_ERR_VALIDATION, "invalid key '" + k + "'");
  const std::string v = trim(value);
  if (v.find('\n') != std::string::npos) return fail(SHE_ERR_VALIDATION, "value of '" + k + "' spans lines");
  for (auto& it : cfg->items)
    if (it.first == k) {
      it.second = v;
      return SHE_OK;
    }
  cfg->items.emplace_back(k, v);
  return SHE_OK;
}

const char* she_config_get(const she_config* cfg, const char* key) {
  if (!cfg || !key) return nullptr;
  for (const auto& it : cfg->items)
    if (it.first == key) return it.second.c_str();
  return nullptr;
}
size_t she_config_size(const she_config* cfg) { return cfg ? cfg->items.size() : 0; }
const char* she_config_key_at(const she_config* cfg, size_t i) {
  return cfg && i < cfg->items.size() ? cfg->items[i].first.c_str() : nullptr;
}
const char* she_config_value_at(const she_config* cfg, size_t i) {
  return cfg && i < cfg->items.size() ? cfg->items[i].second.c_str() : nullptr;
}

she_status she_config_load(she_config* cfg, const char* path) {
  if (!cfg || !path) return fail(SHE_ERR_VALIDATION, "null argument");
  std::ifstream in(path);
  if (!in) return fail(SHE_ERR_IO, std::string("cannot open config file ") + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      return fail(SHE_ERR_VALIDATION, std::string(path) + ":" + std::to_string(lineno) + ": expected key=value");
    const she_status s = she_config_set(cfg, line.substr(0, eq).c_str(), line.substr(eq + 1).c_str());
    if (s != SHE_OK) return s;
  }
  return SHE_OK;
}

she_status she_config_save(const she_config* cfg, const char* path) {
  if (!cfg || !path) return fail(SHE_ERR_VALIDATION, "null argument");
  std::ofstream out(path, std::ios::binary);
  if (!out) return fail(SHE_ERR_IO, std::string("cannot write ") + path);
  for (const auto& [k, v] : cfg->items) out << k << '=' << v << '\n';
  if (!out) return fail(SHE_ERR_IO, std::string("write failed: ") + path);
  return SHE_OK;
}

she_status she_resolve(const char* command, she_config* cfg) {
  if (!cfg) return fail(SHE_ERR_VALIDATION, "null config");
  const Command* c = find_command(command);
  if (!c) return fail(SHE_ERR_VALIDATION, std::string("unknown command '") + (command ? command : "") + "'");
  for (const auto& [k, v] : cfg->items) {
    const bool known = std::any_of(c->keys.begin(), c->keys.end(), [&](const Key& key) { return k == key.name; });
    if (!known) return fail(SHE_ERR_VALIDATION, "unknown option '" + k + "' for command '" + c->name + "'");
  }
  she_config resolved;
  for (const auto& key : c->keys) {
    const char* v = she_config_get(cfg, key.name);
    resolved.items.emplace_back(key.name, v ? v : key.def);
  }
  *cfg = std::move(resolved);
  return SHE_OK;
}

she_status she_run(const char* command, she_config* cfg, she_result** out) {
  if (!out) return fail(SHE_ERR_VALIDATION, "null output pointer");
  *out = nullptr;
  const she_status s = she_resolve(command, cfg);
  if (s != SHE_OK) return s;
  const Command* c = find_command(command);
  auto res = std::make_unique<she_result>();
  const she_status rs = guarded([&] { c->run(Opts(*cfg), *res); });
  if (rs == SHE_OK) *out = res.release();
  return rs;
}

void she_result_free(she_result* r) { delete r; }

size_t she_result_table_count(const she_result* r) { return r ? r->tables.size() : 0; }
const she_table* she_result_table(const she_result* r, size_t i) {
  return r && i < r->tables.size() ? r->tables[i].get() : nullptr;
}
size_t she_result_field_count(const she_result* r) { return r ? r->fields.size() : 0; }
const char* she_result_field_name(const she_result* r, size_t i) {
  return r && i < r->fields.size() ? r->fields[i].first.c_str() : nullptr;
}
she_status she_result_field_write(const she_result* r, size_t i, const char* path) {
  if (!r || i >= r->fields.size() || !path) return fail(SHE_ERR_VALIDATION, "invalid field index or path");
  return guarded([&] { she::write_field(path, r->fields[i].second); });
}

const char* she_table_name(const she_table* t) { return t ? t->name.c_str() : nullptr; }
size_t she_table_rows(const she_table* t) { return t ? t->rows.size() : 0; }
size_t she_table_cols(const she_table* t) { return t ? t->header.size() : 0; }
const char* she_table_header(const she_table* t, size_t col) {
  return t && col < t->header.size() ? t->header[col].c_str() : nullptr;
}
const char* she_table_cell(const she_table* t, size_t row, size_t col) {
  return t && row < t->rows.size() && col < t->rows[row].size() ? t->rows[row][col].c_str() : nullptr;
}

she_status she_table_write_csv(const she_table* t, const char* path) {
  if (!t) return fail(SHE_ERR_VALIDATION, "null table");
  std::ostringstream os;
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      const std::string& c = cells[i];
      if (c.find_first_of(",\"\n") != std::string::npos) {
        os << '"';
        for (char ch : c) os << (ch == '"' ? "\"\"" : std::string(1, ch));
        os << '"';
      } else {
        os << c;
      }
    }
    os << '\n';
  };
  line(t->header);
  for (const auto& r : t->rows) line(r);
  const std::string text = os.str();
  if (!path || std::string(path) == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return SHE_OK;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return fail(SHE_ERR_IO, std::string("cannot write ") + path);
  out << text;
  if (!out) return fail(SHE_ERR_IO, std::string("write failed: ") + path);
  return SHE_OK;
}

}  // extern "C"
