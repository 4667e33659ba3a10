#include "she/structure.hpp"

#include "she/error.hpp"

#include <algorithm>
#include <map>

namespace she {

bool homogeneity_less(const Homogeneity& a, const Homogeneity& b, double kappa) {
  if (a.q == b.q && a.m == b.m) return false;
  // (a.q - b.q) + (a.m - b.m) kappa < 0
  const Rational dq = a.q - b.q;
  const int dm = a.m - b.m;
  if (dm == 0) return dq < 0;
  return boost::rational_cast<double>(dq) + dm * kappa < 0.0;
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

SymbolPtr make_one() {
  auto s = std::make_shared<Symbol>();
  s->kind = Symbol::Kind::One;
  s->repr = "1";
  return s;
}

SymbolPtr make_xi() {
  auto s = std::make_shared<Symbol>();
  s->kind = Symbol::Kind::Xi;
  s->hom = {Rational(-3, 2), -1};
  s->repr = "Xi";
  return s;
}

SymbolPtr make_monomial(std::vector<int> k) {
  bool zero = std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
  if (zero) return make_one();
  auto s = std::make_shared<Symbol>();
  s->kind = Symbol::Kind::Monomial;
  int deg = 0;
  std::string r;
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (k[i] < 0) fail_validation("negative multi-index");
    deg += (i == 0 ? 2 : 1) * k[i];
    for (int j = 0; j < k[i]; ++j) r += (r.empty() ? "" : "*") + std::string("X") + std::to_string(i);
  }
  s->k = std::move(k);
  s->hom = {Rational(deg), 0};
  s->repr = r;
  return s;
}

SymbolPtr make_integral(SymbolPtr child) {
  auto s = std::make_shared<Symbol>();
  s->kind = Symbol::Kind::Integral;
  s->hom = child->hom + Homogeneity{Rational(2), 0};
  s->repr = "I(" + child->repr + ")";
  s->children = {std::move(child)};
  return s;
}

SymbolPtr make_xi_product(SymbolPtr tau) {
  if (tau->kind == Symbol::Kind::One) return make_xi();
  auto s = std::make_shared<Symbol>();
  s->kind = Symbol::Kind::Product;
  auto xi = make_xi();
  s->hom = xi->hom + tau->hom;
  s->repr = "Xi*" + tau->repr;
  s->children = {xi, std::move(tau)};
  return s;
}

double homogeneity(const Symbol& s, double kappa) { return s.hom.value(kappa); }

const Symbol* RegularityStructure::find(const std::string& repr) const {
  for (const auto& s : U)
    if (s->repr == repr) return s.get();
  for (const auto& s : F)
    if (s->repr == repr) return s.get();
  return nullptr;
}

RegularityStructure build_structure(const StructureParams& p) {
  if (!(p.kappa > 0.0 && p.kappa < 0.125)) fail_validation("kappa must lie in (0, 1/8)");
  if (p.d < 1 || p.d > 3) fail_validation("d must be 1, 2 or 3");
  const double kappa = p.kappa;
  const Homogeneity gamma = p.gamma();
  const Homogeneity gamma_f = p.gamma() + p.alpha();

  std::map<std::string, SymbolPtr> U, F;
  // Polynomial part: every monomial of parabolic degree < gamma.
  const int max_deg = 3;
  std::vector<int> k(p.d + 1, 0);
  auto rec = [&](auto&& self, std::size_t axis, int deg) -> void {
    if (axis == k.size()) {
      auto m = make_monomial(k);
      if (homogeneity_less(m->hom, gamma, kappa)) U.emplace(m->repr, m);
      return;
    }
    const int w = axis == 0 ? 2 : 1;
    for (int e = 0; deg + w * e <= max_deg; ++e) {
      k[axis] = e;
      self(self, axis + 1, deg + w * e);
    }
    k[axis] = 0;
  };
  rec(rec, 0, 0);

  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [r, tau] : std::map<std::string, SymbolPtr>(U)) {
      auto s = make_xi_product(tau);
      if (homogeneity_less(s->hom, gamma_f, kappa) && F.emplace(s->repr, s).second) changed = true;
    }
    for (const auto& [r, sigma] : std::map<std::string, SymbolPtr>(F)) {
      auto s = make_integral(sigma);
      if (homogeneity_less(s->hom, gamma, kappa) && U.emplace(s->repr, s).second) changed = true;
    }
  }

  auto ordered = [](const std::map<std::string, SymbolPtr>& m) {
    std::vector<SymbolPtr> v;
    for (const auto& [r, s] : m) v.push_back(s);
    std::stable_sort(v.begin(), v.end(), [](const SymbolPtr& a, const SymbolPtr& b) {
      if (a->hom.q != b->hom.q) return a->hom.q < b->hom.q;
      return a->repr < b->repr;
    });
    return v;
  };
  return {p, ordered(U), ordered(F)};
}

}  // namespace she
