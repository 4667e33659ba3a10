#pragma once

#include "she/field.hpp"
#include "she/renorm.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace she {

enum class Equation { pam2d, pam3d, she1d };
enum class Scheme { exponential_euler, semi_implicit };

Equation parse_equation(const std::string& s);
std::string to_string(Equation e);
int equation_dim(Equation e);
bool equation_spacetime(Equation e);

struct InitialCondition {
  enum class Kind { dirac, constant, field };
  Kind kind = Kind::constant;
  std::vector<double> x0;  // dirac location, default box centre
  double c = 1.0;
  Field f;

  static InitialCondition dirac(std::vector<double> x0 = {});
  static InitialCondition constant(double c);
  static InitialCondition from_field(Field f);
};

struct SolverConfig {
  Equation equation = Equation::she1d;
  Grid grid;        // spatial box: d, L, N
  double T = 0.5;
  double dt = 0.0;  // 0: dx^2/4, shrunk so that T is a whole number of steps
  double eps = 0.1;
  std::optional<double> C_eps;  // empty: computed from the renormalisation integrals
  InitialCondition u0;
  Scheme scheme = Scheme::exponential_euler;
  std::uint64_t seed = 1;
  std::vector<double> snapshots;  // empty: {T}
  double ell = 1.0;
  double R_G = 4.0;           // PAM Green function truncation for the automatic constant
  double sharpness = 1.0;     // mollifier bump
  QmcOptions qmc{1 << 14, 1 << 18, 16, 7, 0.02, 1e-3};
  double t_start = 0.0;       // restart offset into the noise record

  double step() const;
  std::size_t steps() const;
  Mollifier mollifier(double e) const;
};

struct SnapshotDiag {
  double t, mass, min, max, weighted_sup;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> snapshots;
  std::vector<SnapshotDiag> diag;
  double C_eps = 0.0;
};

// Renormalisation constant used for `auto`: PAM3d c + c11 + c12 with R_G,
// SHE1d c + c11 + c12, PAM2d c with the truncated logarithmic Green function.
double auto_renorm_constant(Equation e, const Mollifier& m, double R_G, const QmcOptions& o);

// White noise on the solver grid: spatial for PAM; for SHE space-time with
// slices t_k = k dt, padded past T by at least 2 eps_max^2 so that periodic
// mollification in time does not wrap into [0, T].
Field sample_equation_noise(const SolverConfig& cfg, double eps_max);
Field smooth_noise(const Field& raw, const SolverConfig& cfg, double eps);

Trajectory solve_renormalised(const SolverConfig& cfg);
Trajectory solve_with_noise(const SolverConfig& cfg, const Field& xi_eps, double C);
Trajectory solve_ito_reference(const SolverConfig& cfg);
Trajectory solve_ito_with_noise(const SolverConfig& cfg, const Field& raw);

// Spatial distance of x from the box centre (periodic).
double centre_radius(const Grid& g, std::size_t flat);
// (sum dx^d |a-b|^p e^{-p(t+ell)(1+|x|)})^{1/p}
double weighted_distance(const Field& a, const Field& b, double t, double ell, double p);

struct ConvergenceRow {
  std::uint64_t seed;
  double eps_a, eps_b;  // eps_b = 0 marks the Ito reference
  double distance;
};
struct ConvergenceOptions {
  std::vector<double> eps_list;
  std::vector<std::uint64_t> seeds;
  double p = 2.0;
  bool ito = true;  // SHE only
};
std::vector<ConvergenceRow> convergence_study(const SolverConfig& base, const ConvergenceOptions& o);

struct NormDiag {
  double t, weighted_lp, weighted_besov, unweighted_sup;
};
// Weighted L^p and Besov(alpha, p) norms per snapshot with weight e^{(t+ell)(1+|x|)};
// `shift_time` evaluates the weight at t + lambda^2, lambda = 2^{-n_min}.
std::vector<NormDiag> weighted_norm_diag(const Trajectory& tr, double alpha, double p, double ell, int r = 2,
                                         bool shift_time = false, int n_min = 0, int n_max = -1);

// Independent PAM2d oracle: v = u e^{-w} with Laplacian(w) = -(V - mean V), V = xi - C,
// so v_t = Lap v + 2 grad w . grad v + (|grad w|^2 + mean V) v, integrated by spectral RK4.
Field pam2d_transformed(const Grid& g, const Field& xi_eps, double C, const Field& u0, double T);

}  // namespace she
