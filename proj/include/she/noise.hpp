#pragma once

#include "she/field.hpp"
#include "she/wavelet.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace she {

Field sample_white_noise(const Grid& g, FieldKind kind, std::uint64_t seed);

// 1-d bump b(u) = exp(-s/(1-u^2))/Z on (-1,1); rho(t,x) = b(t) prod b(x_i),
// rho_eps(t,x) = eps^{-|s|} rho(t/eps^2, x/eps). Spatial factors carry an
// optional tilt (1 + skew*u), |skew| < 1, which keeps unit mass; `reflect` flips x.
struct Mollifier {
  double eps = 0.1;
  double sharpness = 1.0;
  bool spacetime = true;
  int d = 1;
  bool reflect = false;
  double skew = 0.0;

  double bump(double u) const;          // normalized 1-d density
  double bump_cdf(double u) const;      // its distribution function
  double space_bump(double u) const { return bump(u) * (1.0 + skew * u); }
  double normalization() const;         // Z
  double rho(const double* z) const;    // rho_eps at (t, x) or x for spatial
  int scaling_sum() const { return spacetime ? 2 + d : d; }
};

Field mollify(const Field& noise, const Mollifier& m);

struct RegularityEstimate {
  double alpha_hat = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  std::vector<double> per_field;
  bool regular = false;
};

// Slope of log2 of the level aggregate (mean over t and psi-types of
// sum_x 2^{-nd}|<f,psi^n_{t,x}>|^p, to the power 1/p) against n; the
// critical exponent is -|s|/2 - slope. CI by percentile bootstrap over fields.
double regularity_slope(const Field& f, double p, const WaveletBasis& b, int n_min, int n_max,
                        std::vector<double>* aggregates = nullptr);
// Mean of per-field exponents with its percentile bootstrap interval.
RegularityEstimate summarize_regularity(std::vector<double> per_field, std::uint64_t bootstrap_seed = 1);
RegularityEstimate estimate_regularity(const std::vector<Field>& fields, double p, const WaveletBasis& b, int n_min,
                                       int n_max, std::uint64_t bootstrap_seed = 1);

}  // namespace she
