#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace she {

// Circular convolution of every line along `axis` of a row-major array with
// a kernel of that axis' length (kernel[0] is the zero offset).
void circular_convolve_axis(std::vector<double>& data, const std::vector<std::size_t>& shape, std::size_t axis,
                            const std::vector<double>& kernel);

// Real <-> half-complex transforms over a d-dimensional periodic grid of side N.
class RealFFT {
public:
  RealFFT(int d, std::size_t N);
  ~RealFFT();
  RealFFT(const RealFFT&) = delete;
  RealFFT& operator=(const RealFFT&) = delete;

  std::size_t real_size() const { return nreal_; }
  std::size_t complex_size() const { return ncplx_; }
  void forward(const double* in, std::complex<double>* out);
  void backward(const std::complex<double>* in, double* out);  // unnormalized
  // |k|^2 for each half-complex index on a box of side L.
  std::vector<double> wavenumber_sq(double L) const;
  // k_axis for each half-complex index; sum over axes of f(k_a).
  std::vector<double> wavenumber_axis(double L, int axis) const;
  std::vector<double> symbol(double L, const std::function<double(double)>& f) const;

private:
  int d_;
  std::size_t N_, nreal_, ncplx_;
  void* fwd_ = nullptr;
  void* bwd_ = nullptr;
  std::vector<double> rbuf_;
  std::vector<std::complex<double>> cbuf_;
};

}  // namespace she
