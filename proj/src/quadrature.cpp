#include "she/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace she {

Nodes gauss_legendre(double a, double b, int panels) {
  using G = boost::math::quadrature::gauss<double, 20>;
  const auto& ab = G::abscissa();
  const auto& wt = G::weights();
  Nodes q;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h, r = 0.5 * h;
    for (std::size_t i = 0; i < ab.size(); ++i) {
      q.x.push_back(c + r * ab[i]);
      q.w.push_back(r * wt[i]);
      if (ab[i] != 0.0) {
        q.x.push_back(c - r * ab[i]);
        q.w.push_back(r * wt[i]);
      }
    }
  }
  return q;
}

double sphere_moment(const std::vector<int>& k) {
  double num = 2.0;
  int tot = 0;
  for (int ki : k) {
    if (ki % 2) return 0.0;
    num *= std::tgamma((ki + 1) / 2.0);
    tot += ki;
  }
  return num / std::tgamma((tot + double(k.size())) / 2.0);
}

}  // namespace she
