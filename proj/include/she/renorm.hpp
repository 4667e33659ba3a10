#pragma once

#include "she/noise.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace she {

// Self-convolution rho_eps * rho_eps of a product mollifier, per axis from a
// tabulated b*b on [-2,2] (cubic B-spline). Sampling draws each axis from the
// cell-constant density of the table and returns the ratio rho^{*2}/density.
class RhoSq {
public:
  explicit RhoSq(const Mollifier& m);

  const Mollifier& mollifier() const { return m_; }
  int dims() const { return m_.scaling_sum() == m_.d ? m_.d : m_.d + 1; }
  double operator()(const double* z) const;
  double axis(int a, double u) const;  // unit-scale factor, a = 0 is time when spacetime
  double scale(int a) const;
  double total_mass() const;           // integral of the tabulated density
  double sample(const double* U, double* z) const;

  struct Table;

private:
  Mollifier m_;
  std::shared_ptr<const Table> time_, space_;
  const Table& table(int a) const;
};

struct GreenFn {
  enum class Kind { pam3d, she1d, custom };
  Kind kind = Kind::pam3d;
  int d = 3;
  bool spacetime = false;
  double R_G = 1.0;
  std::function<double(const double*)> eval_fn;
  std::function<double(const double*)> self_conv_fn;  // G * G, needed for c12

  double operator()(const double* z) const;
  double self_conv(const double* z) const;

  // chi(|x|/R_G) / (4 pi |x|), chi = 1 on [0,1/2], 0 beyond 1.
  static GreenFn pam3d(double R_G = 1.0);
  // 1-d heat kernel on space-time, zero for t <= 0.
  static GreenFn she1d();
  // Space-time custom kernels: c11 assumes G vanishes for t <= 0; c_eps and c12 do not.
  static GreenFn custom(int d, bool spacetime, std::function<double(const double*)> eval,
                        std::function<double(const double*)> self_conv = {});

private:
  std::shared_ptr<const std::function<double(double)>> radial_gg_;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;  // points per replicate
};

struct QmcOptions {
  std::size_t samples = 1 << 14;      // starting points per replicate
  std::size_t max_samples = 1 << 20;  // doubling stops here
  int replicates = 16;
  std::uint64_t seed = 1;
  double rel_tol = 0.02;  // stop when stderr <= max(rel_tol |value|, abs_tol)
  double abs_tol = 1e-3;
};

// Randomized QMC: Sobol points with a per-replicate digital shift.
Estimate rqmc(int dims, std::size_t n, int replicates, std::uint64_t seed,
              const std::function<double(const double*)>& f);
Estimate rqmc_adaptive(int dims, const QmcOptions& o, const std::function<double(const double*)>& f);

struct C12Estimate {
  Estimate value;   // A - B
  Estimate five;    // A: integral of G G G rho2 rho2
  Estimate delta;   // B: c_eps times integral of G G rho2
};

struct RenormConstants {
  double eps = 0.0;
  double c = 0.0, c_err = 0.0;
  Estimate c11;
  C12Estimate c12;
  double C = 0.0;
};

double c_eps(const Mollifier& m, const GreenFn& G, double* err = nullptr);
Estimate c11_eps(const Mollifier& m, const GreenFn& G, const QmcOptions& o = {});
C12Estimate c12_eps(const Mollifier& m, const GreenFn& G, double c_value, const QmcOptions& o = {});
RenormConstants renorm_constants(const Mollifier& m, const GreenFn& G, const QmcOptions& o = {});

}  // namespace she
