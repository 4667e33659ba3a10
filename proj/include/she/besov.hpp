#pragma once

#include "she/field.hpp"
#include "she/structure.hpp"
#include "she/wavelet.hpp"

#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace she {

// Radial weights w(t, |x|, zeta).
struct WeightFamily {
  enum class Kind { none, polynomial, exponential, model, solution1, solution2, custom };
  Kind kind = Kind::none;
  double a = 0.0;      // polynomial exponent
  double ell = 0.0;    // exponential rate / time offset
  double c = 0.0;      // Eq-weights parameter
  double kappa = 0.0;
  std::function<double(double, double, double)> fn;  // custom

  double operator()(double t, double r, double zeta = 0.0) const;
  double log_value(double t, double r, double zeta = 0.0) const;
  std::string name() const;

  static WeightFamily none() { return {}; }
  static WeightFamily polynomial(double a);
  static WeightFamily exponential(double ell);
  static WeightFamily model(double c, double kappa);
  static WeightFamily solution(int i, double c, double kappa, double ell);
  static WeightFamily custom(std::function<double(double, double, double)> f);
};

struct BesovParams {
  double alpha = -1.5;
  double p = 2.0;  // infinity allowed
  int r = 2;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// sup over levels n and times of (sum_x 2^{-nd} |c / (w 2^{-n|s|/2 - n alpha})|^p)^{1/p},
// plus the same aggregate of the scaling coefficients at n_min.
double besov_norm(const CoeffPyramid& pyr, const BesovParams& bp, const WeightFamily& w = WeightFamily::none(),
                  const Grid* grid = nullptr);

// Per-level aggregates (index 0 is the scaling term), for diagnostics.
std::vector<double> besov_level_terms(const CoeffPyramid& pyr, const BesovParams& bp,
                                      const WeightFamily& w = WeightFamily::none(), const Grid* grid = nullptr);

struct WeightCheck {
  bool ok = false;
  double C_est = 0.0;
  double C_est_enlarged = 0.0;
};
WeightCheck check_weight(const WeightFamily& w, double box_radius, double t = 0.0, double zeta = 0.0);

struct WRow {
  std::string condition;
  std::string interpretation;
  double worst_margin;  // max log(lhs/rhs); <= 0 passes (W-5: max |log ratio|)
  double K_est;
  bool pass;
};
enum class W5Reading { extend_by_equality, strict };
// zeta ranges over the small-kappa symbol set (the one the weights are designed for),
// with homogeneities evaluated at the given kappa.
std::vector<WRow> check_assumption_W(double c, double kappa, double T, double ell, int d,
                                     W5Reading reading = W5Reading::extend_by_equality);

bool dirac_membership(int d, double p, double eta);

struct DiracNorms {
  std::vector<int> resolutions;  // J with dx = 2^-J
  std::vector<double> norms;
  double growth = 0.0;  // log2(norm_J / norm_{J-1}) at the finest pair
  bool bounded = false;
};
DiracNorms dirac_besov_norms(int d, double p, double eta, const WaveletBasis& b, const std::vector<int>& resolutions);

}  // namespace she
