#include "she/fft.hpp"

#include "she/parallel.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace she {

namespace {
std::mutex g_plan_mu;  // the FFTW planner is not thread-safe
}

void circular_convolve_axis(std::vector<double>& data, const std::vector<std::size_t>& shape, std::size_t axis,
                            const std::vector<double>& kernel) {
  const std::size_t n = shape[axis];
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t nc = n / 2 + 1;

  std::vector<double> line(n);
  std::vector<std::complex<double>> spec(nc), kspec(nc);
  fftw_plan pf, pb;
  {
    std::lock_guard lk(g_plan_mu);
    pf = fftw_plan_dft_r2c_1d(int(n), line.data(), reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE | FFTW_UNALIGNED);
    pb = fftw_plan_dft_c2r_1d(int(n), reinterpret_cast<fftw_complex*>(spec.data()), line.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  line = kernel;
  fftw_execute(pf);
  kspec = spec;
  for (auto& c : kspec) c /= double(n);

  const std::size_t lines = outer * inner;
  parallel_chunks(lines, 64, [&](std::size_t b, std::size_t e) {
    std::vector<double> ln(n);
    std::vector<std::complex<double>> sp(nc);
    for (std::size_t l = b; l < e; ++l) {
      const std::size_t o = l / inner, i = l % inner;
      double* base = data.data() + o * n * inner + i;
      for (std::size_t j = 0; j < n; ++j) ln[j] = base[j * inner];
      fftw_execute_dft_r2c(pf, ln.data(), reinterpret_cast<fftw_complex*>(sp.data()));
      for (std::size_t j = 0; j < nc; ++j) sp[j] *= kspec[j];
      fftw_execute_dft_c2r(pb, reinterpret_cast<fftw_complex*>(sp.data()), ln.data());
      for (std::size_t j = 0; j < n; ++j) base[j * inner] = ln[j];
    }
  });
  std::lock_guard lk(g_plan_mu);
  fftw_destroy_plan(pf);
  fftw_destroy_plan(pb);
}

RealFFT::RealFFT(int d, std::size_t N) : d_(d), N_(N) {
  nreal_ = 1;
  for (int i = 0; i < d; ++i) nreal_ *= N;
  ncplx_ = nreal_ / N * (N / 2 + 1);
  rbuf_.resize(nreal_);
  cbuf_.resize(ncplx_);
  std::vector<int> dims(d, int(N));
  std::lock_guard lk(g_plan_mu);
  fwd_ = fftw_plan_dft_r2c(d, dims.data(), rbuf_.data(), reinterpret_cast<fftw_complex*>(cbuf_.data()), FFTW_ESTIMATE | FFTW_UNALIGNED);
  bwd_ = fftw_plan_dft_c2r(d, dims.data(), reinterpret_cast<fftw_complex*>(cbuf_.data()), rbuf_.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
}

RealFFT::~RealFFT() {
  std::lock_guard lk(g_plan_mu);
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void RealFFT::forward(const double* in, std::complex<double>* out) {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void RealFFT::backward(const std::complex<double>* in, double* out) {
  // c2r destroys its input.
  std::copy(in, in + ncplx_, cbuf_.begin());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(bwd_), reinterpret_cast<fftw_complex*>(cbuf_.data()), out);
}

std::vector<double> RealFFT::wavenumber_axis(double L, int axis) const {
  std::vector<double> k(ncplx_);
  const double w = 2.0 * std::numbers::pi / L;
  const std::size_t nh = N_ / 2 + 1;
  for (std::size_t idx = 0; idx < ncplx_; ++idx) {
    std::size_t rest = idx;
    for (int a = d_ - 1; a >= 0; --a) {
      const std::size_t len = a == d_ - 1 ? nh : N_;
      const std::size_t j = rest % len;
      rest /= len;
      if (a == axis) k[idx] = w * (j <= N_ / 2 ? double(j) : double(j) - double(N_));
    }
  }
  return k;
}

std::vector<double> RealFFT::symbol(double L, const std::function<double(double)>& f) const {
  std::vector<double> s(ncplx_, 0.0);
  for (int a = 0; a < d_; ++a) {
    const auto k = wavenumber_axis(L, a);
    for (std::size_t i = 0; i < ncplx_; ++i) s[i] += f(k[i]);
  }
  return s;
}

std::vector<double> RealFFT::wavenumber_sq(double L) const {
  return symbol(L, [](double k) { return k * k; });
}

}  // namespace she
