#pragma once

#include <vector>

namespace she {

struct Nodes {
  std::vector<double> x, w;
};

// Composite 20-point Gauss-Legendre rule on [a,b] with `panels` equal panels.
Nodes gauss_legendre(double a, double b, int panels);

// Surface moment of the unit sphere S^{d-1}: integral of prod omega_i^{k_i}.
double sphere_moment(const std::vector<int>& k);

}  // namespace she
