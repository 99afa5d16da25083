// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <mutex>

#include "mss/error.hpp"

namespace mss::detail {
namespace {
// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct RealFft::Impl {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

RealFft::RealFft(int size) : size_(size), impl_(std::make_unique<Impl>()) {
  if (size <= 0) throw UsageError("FFT size must be positive");
  std::lock_guard lock(planner_mutex());
  impl_->real = fftw_alloc_real(static_cast<std::size_t>(size));
  impl_->spec = fftw_alloc_complex(static_cast<std::size_t>(size / 2 + 1));
  impl_->fwd = fftw_plan_dft_r2c_1d(size, impl_->real, impl_->spec, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(size, impl_->spec, impl_->real, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(impl_->fwd);
  fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->real);
  fftw_free(impl_->spec);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  const auto n = static_cast<std::size_t>(size_);
  const std::size_t used = std::min(in.size(), n);
  std::copy_n(in.begin(), used, impl_->real);
  std::fill(impl_->real + used, impl_->real + n, 0.0);
  fftw_execute(impl_->fwd);
  for (std::size_t k = 0; k < n / 2 + 1; ++k) {
    out[k] = {impl_->spec[k][0], impl_->spec[k][1]};
  }
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  const auto n = static_cast<std::size_t>(size_);
  for (std::size_t k = 0; k < n / 2 + 1; ++k) {
    impl_->spec[k][0] = in[k].real();
    impl_->spec[k][1] = in[k].imag();
  }
  // c2r destroys its input; the buffer is refilled on every call.
  fftw_execute(impl_->inv);
  std::copy_n(impl_->real, n, out.begin());
}

}  // namespace mss::detail
