#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace she {

using Rational = boost::rational<std::int64_t>;

// q + m*kappa, compared for a given numeric kappa.
struct Homogeneity {
  Rational q{0};
  int m = 0;

  double value(double kappa) const { return boost::rational_cast<double>(q) + m * kappa; }
  Homogeneity operator+(const Homogeneity& o) const { return {q + o.q, m + o.m}; }
  bool operator==(const Homogeneity& o) const = default;
};

// Exact comparison a < b at the given kappa; kappa itself is a double, so the
// kappa-dependent part is compared in floating point only when q differs in sign.
bool homogeneity_less(const Homogeneity& a, const Homogeneity& b, double kappa);

struct Symbol;
using SymbolPtr = std::shared_ptr<const Symbol>;

struct Symbol {
  enum class Kind { One, Xi, Monomial, Integral, Product };
  Kind kind = Kind::One;
  std::vector<int> k;               // Monomial: multi-index, k[0] is time
  std::vector<SymbolPtr> children;  // Integral: one child; Product: Xi first
  Homogeneity hom;
  std::string repr;
};

struct StructureParams {
  double kappa = 0.01;
  int d = 3;

  Homogeneity alpha() const { return {Rational(-3, 2), -1}; }
  Homogeneity eta() const { return {Rational(-1, 2), 3}; }
  Homogeneity gamma() const { return {Rational(3, 2), 2}; }
  int scaling_sum() const { return 2 + d; }
};

struct RegularityStructure {
  StructureParams params;
  std::vector<SymbolPtr> U;
  std::vector<SymbolPtr> F;

  const Symbol* find(const std::string& repr) const;
};

SymbolPtr make_one();
SymbolPtr make_xi();
SymbolPtr make_monomial(std::vector<int> k);
SymbolPtr make_integral(SymbolPtr child);
SymbolPtr make_xi_product(SymbolPtr tau);  // Xi * tau, canonicalized

RegularityStructure build_structure(const StructureParams& p);
double homogeneity(const Symbol& s, double kappa);

// Rational formatted as "a/b" or "a".
std::string to_string(const Rational& r);

}  // namespace she
