#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace she {

double heat_kernel(double t, const double* x, int d);
double heat_kernel(double t, const std::vector<double>& x);

// z = (t, x_1..x_d). Multi-indices k = (k_0, k_1..k_d), parabolic degree 2k_0+|k_x|.
using MultiIndex = std::vector<int>;
int parabolic_degree(const MultiIndex& k);
std::vector<MultiIndex> multi_indices(int d, int max_degree);

// P = sum_{n>=0} P_n + P_minus with P_n(t,x) = 2^{nd} P_0(4^n t, 2^n x).
// P_0 = psi_0 P + R - 2^d R(S_1 .), where psi_0 = Theta - Theta(S_1 .) is a
// smooth annular cutoff and R = B * polynomial fixes the moments up to order r.
class KernelDecomposition {
public:
  KernelDecomposition(int d, int r, int n_max = 12);

  int d() const { return d_; }
  int r() const { return r_; }
  int n_max() const { return n_max_; }
  double condition_number() const { return cond_; }
  const std::vector<MultiIndex>& moments_indices() const { return multi_; }

  double P0(const double* z) const;
  double Pn(int n, const double* z) const;
  double Pminus(const double* z) const;
  // Theta(z) P(z) + R(z): the singular part sum_n P_n.
  double Pplus(const double* z) const;
  double theta(const double* z) const;  // Theta(z) = cutoff(N(z))
  double correction(const double* z) const;  // R(z)

  double DkP0(const MultiIndex& k, const double* z) const;
  double DkPn(int n, const MultiIndex& k, const double* z) const;
  double DkPminus(const MultiIndex& k, const double* z) const;

  // N(z) = (t^2 + |x|^4)^{1/4}; dominates the parabolic sup norm.
  double smooth_norm(const double* z) const;

private:
  double finite_difference(const MultiIndex& k, const double* z, double (KernelDecomposition::*f)(const double*) const,
                           double h) const;
  double bump(const double* z) const;
  double qbasis(std::size_t l, const double* z) const;

  int d_, r_, n_max_;
  std::vector<MultiIndex> multi_;
  std::vector<double> coef_;  // R(z) = bump(z) * sum_l coef_l q_l(z)
  double cond_ = 0.0;
};

double smooth_step(double s);  // 1 on [0,1/2], 0 on [1,inf)

constexpr double kReassemblyTol = 1e-5;
constexpr double kMomentTol = 1e-8;

struct KernelCheck {
  int d = 1, r = 2, n_max = 12;
  std::size_t points = 0;
  double reassembly = 0.0;  // max |sum_n P_n + P_minus - P| / max(|P|, N^{-d})
  double scaling = 0.0;     // max relative defect of P_n against 2^{nd} P_0(S^n .)
  std::size_t support_violations = 0;  // P_n != 0 with N(z) >= 2^{-n}
  double abs_integral = 0.0;           // int |P_0|
  std::vector<MultiIndex> moment_index;
  std::vector<double> moment;  // |int P_0 z^k| / int |P_0|
  double moment_max = 0.0;
  bool pass() const;
};

// Reassembly on quasi-random points with N(z) in [1e-3, 10] and moments of P_0
// by direct quadrature, independent of the construction.
KernelCheck kernel_check(int d, int r, std::size_t points = 1000, std::uint64_t seed = 1, int n_max = 12);

}  // namespace she
