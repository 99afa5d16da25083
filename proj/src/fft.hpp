// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <memory>
#include <span>

namespace mss::detail {

// Real <-> half-spectrum FFT of a fixed size backed by FFTW. Instances own
// their scratch buffers; use one per thread.
class RealFft {
 public:
  explicit RealFft(int size);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return size_; }

  // in.size() <= size (zero-padded); out.size() == size/2 + 1.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // Unnormalized inverse; in.size() == size/2 + 1, out.size() == size.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  struct Impl;
  int size_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mss::detail
