#pragma once

#include "she/field.hpp"
#include "she/kernel.hpp"
#include "she/structure.hpp"
#include "she/wavelet.hpp"

#include <string>
#include <vector>

namespace she {

// Node of a spacetime grid: time slice k and spatial indices j.
struct Node {
  std::size_t k = 0;
  std::vector<std::size_t> j;
};

// Parses "1", "Xi", "X0", "X1*X1", "I(Xi)", "Xi*I(Xi)", "Xi*X1", ...
SymbolPtr parse_symbol(const std::string& name, int d);

// Canonical model of a smooth spacetime field on the symbols 1, X^k, Xi,
// Xi X^k, I(Xi) and Xi I(Xi):
//   Pi_z X^k = (. - z)^k,  Pi_z Xi = xi,  Pi_z I(Xi) = K xi - K xi(z),
// products pointwise, K = P_+ the singular part of the heat kernel.
// Spatial displacements use the nearest periodic image.
class Model {
public:
  // Model without noise; only 1 and X^k are allowed.
  Model(const Grid& g, std::vector<SymbolPtr> symbols, double kappa);
  // xi must be a spacetime field; K xi is computed only when I(Xi) is used.
  static Model canonical(const Field& xi, const KernelDecomposition& dec, std::vector<SymbolPtr> symbols,
                         double kappa);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return sym_.size(); }
  const Symbol& symbol(std::size_t i) const { return *sym_[i]; }
  std::vector<std::string> names() const;
  std::size_t index(const std::string& repr) const;
  double homogeneity(std::size_t i) const;
  double kappa() const { return kappa_; }
  bool has_noise() const { return !xi_.values.empty(); }
  const Field& xi() const { return xi_; }
  const Field& k_xi() const { return kxi_; }

  std::vector<double> position(const Node& z) const;
  std::vector<double> displacement(const Node& from, const Node& to) const;  // to - from
  double pi(std::size_t tau, const Node& z, const Node& w) const;
  // Column j holds the coefficients of Gamma_{z,z'} tau_j, so that
  // Pi_z Gamma_{z,z'} = Pi_{z'}.
  std::vector<double> gamma(const Node& z, const Node& zp) const;
  std::vector<double> apply_gamma(const Node& z, const Node& zp, const std::vector<double>& coeffs) const;

  enum class Kind { one, poly, xi, xi_poly, i_xi, xi_i_xi };
  Kind kind(std::size_t i) const { return kinds_[i]; }
  const MultiIndex& degree(std::size_t i) const { return deg_[i]; }
  double value(const Field& f, const Node& z) const;

private:
  Model() = default;
  void classify();

  Grid grid_;
  double kappa_ = 0.01;
  std::vector<SymbolPtr> sym_;
  std::vector<Kind> kinds_;
  std::vector<MultiIndex> deg_;
  Field xi_, kxi_;
};

// P_+ * xi on the grid: causal sum over earlier slices, periodic in space.
Field convolve_singular_kernel(const Field& xi, const KernelDecomposition& dec);

struct ModelledDistribution {
  std::vector<std::string> symbols;
  double gamma = 1.0;
  double p = 2.0;
  Field coeffs;  // modelled field on the model grid, one channel per symbol

  static ModelledDistribution zeros(const Model& m, double gamma, double p);
  std::vector<double> at(const Node& z) const;
  double& coeff(std::size_t sym, const Node& z);
};

// Field file plus a JSON sidecar at path + ".json" naming the symbols.
void write_modelled(const std::string& path, const ModelledDistribution& f);
ModelledDistribution read_modelled(const std::string& path);

struct ReconLevel {
  int n = 0;
  std::vector<LatticeAxis> axes;  // time first
  std::vector<double> A;
  std::vector<double> dA;  // empty at the finest level
};

// Base points sit at t - C 2^{-2n}, C = 7M^2+1; coefficients average over
// the sup-norm ball B(x, 2^{-n}). All levels share the time window
// [C 2^{-2 n_min}, last slice].
struct ReconstructionState {
  int n_min = 0, n_max = 0;
  int d = 1;
  double shift_constant = 0.0;
  double t_begin = 0.0;
  std::vector<ReconLevel> levels;
  Field output;  // R_{n_max} f sampled on the model grid
  double valid_begin = 0.0, valid_end = 0.0;
};

ReconstructionState reconstruct(const ModelledDistribution& f, const Model& m, const WaveletBasis& b, int n_min,
                                int n_max);

// <g, phi^n_c> for every lattice point of a level, by grid quadrature.
std::vector<double> project_field(const Field& g, const WaveletBasis& b, const ReconLevel& lev);

struct SewingLevel {
  int n = 0;
  double a_term = 0.0;   // scaled with alpha
  double da_term = 0.0;  // scaled with gamma
  double da_plain = 0.0; // unscaled, for the rate fit
};

struct SewingReport {
  std::vector<SewingLevel> levels;
  double sup_a = 0.0, sup_da = 0.0;
  double slope_a = 0.0, slope_da = 0.0;  // log2 growth per level of the scaled terms
  bool stable_a = true, stable_da = true;
  double rate = 0.0;  // fitted decay exponent of the unscaled delta terms, NaN if undefined
  int violation_level = -1;
};

constexpr double kSewingGrowthTol = 0.25;

// Level norm sup_t (sum_x 2^{-nd} |c / 2^{-n|s|/2 - n beta}|^p)^{1/p}.
double level_norm(const ReconLevel& lev, const std::vector<double>& c, double beta, double p, int d);

SewingReport sewing_check(const ReconstructionState& st, double alpha, double gamma, double p);

struct DGammaReport {
  double pointwise = 0.0, space = 0.0, time = 0.0;
  double value = 0.0;
};

// The three terms of the D^{gamma,p} norm on lambda = 2^-2..2^-6 (those the
// grid resolves) and at most max_times evenly spaced slices.
DGammaReport dgamma_norm(const ModelledDistribution& f, const Model& m, double gamma, double p,
                         std::size_t max_times = 64);

// sup over z of |<Pi_z tau, eta^lambda_z>| for a smooth bump eta with unit
// integral; one entry per lambda.
std::vector<double> model_bound(const Model& m, std::size_t tau, const std::vector<Node>& z,
                                const std::vector<double>& lambdas);

}  // namespace she
