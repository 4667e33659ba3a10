#pragma once

#include "she/field.hpp"

#include <cstddef>
#include <vector>

namespace she {

// Daubechies scaling function and wavelet tabulated exactly on the dyadic
// grid 2^-J Z by the cascade recursion; support [0, 2N-1].
struct WaveletBasis {
  int r = 1;
  int N = 3;
  int J = 14;
  std::vector<double> h;  // orthonormal filter, sum sqrt(2)
  std::vector<double> a;  // refinement coefficients, sum 2
  std::vector<double> g;  // wavelet filter
  std::vector<double> phi_tab, psi_tab;

  int support() const { return 2 * N - 1; }
  double phi(double x) const { return lookup(phi_tab, x); }
  double psi(double x) const { return lookup(psi_tab, x); }
  double profile(bool wavelet, double x) const { return wavelet ? psi(x) : phi(x); }
  // Time shift constant 7M^2+1 with M the support length.
  double shift_constant() const { return 7.0 * support() * support() + 1.0; }

private:
  double lookup(const std::vector<double>& tab, double x) const;
};

WaveletBasis build_basis(int r);
int daubechies_order_for(int r);

// Parabolic rescaling phi^n_{t,x} or psi-mixed tensor at a lattice point.
// mask bit a selects psi on axis a (axis 0 is time when spacetime).
double rescaled(const WaveletBasis& b, int n, bool spacetime, unsigned mask, const std::vector<double>& center,
                const std::vector<double>& point);

struct SelftestRow {
  std::string check;
  double residual;
  double tolerance;
};
std::vector<SelftestRow> wavelet_selftest(const WaveletBasis& b);

// Lattice Lambda_n restricted to a field's box. Spatial axes are periodic
// with 2^n L points; the time axis keeps only points whose support fits.
struct LatticeAxis {
  double spacing = 1.0;
  double origin = 0.0;
  std::size_t count = 0;
  bool periodic = true;
};

struct CoeffLevel {
  int n = 0;
  std::vector<LatticeAxis> axes;
  std::vector<std::vector<double>> coeffs;  // index mask-1 for psi types; flattened lattice
  std::size_t points() const;
};

struct CoeffPyramid {
  int n_min = 0, n_max = 0;
  int d = 1;
  bool spacetime = false;
  CoeffLevel phi;  // scaling coefficients at n_min (coeffs[0])
  std::vector<CoeffLevel> levels;
  int scaling_sum() const { return spacetime ? 2 + d : d; }
  double sum_squares() const;
};

std::vector<LatticeAxis> lattice_axes(const Grid& g, bool spacetime, int n, int support);

CoeffPyramid analyze(const Field& f, const WaveletBasis& b, int n_min, int n_max);

// Separable pairing of a field with the tensor of 1-d profiles on a level-n
// lattice: out(lattice) = sum_grid vol * f * prod_a s_a^{1/2} prof_a(s_a (y_a - c_a)).
struct AxisProfile {
  const WaveletBasis* basis;
  bool wavelet;
  int moment = 0;  // extra factor u^moment in the rescaled variable
};
std::vector<double> lattice_pairing(const Field& f, std::size_t channel, const WaveletBasis& b, int n,
                                    const std::vector<AxisProfile>& prof, const std::vector<LatticeAxis>& axes);

// Adjoint of the scaling-function pairing: sum_c coeffs(c) phi^n_c sampled on
// the nodes of a field of the given grid and kind.
std::vector<double> lattice_synthesis(const std::vector<double>& coeffs, const Grid& g, FieldKind kind,
                                      const WaveletBasis& b, int n, const std::vector<LatticeAxis>& axes);

}  // namespace she
