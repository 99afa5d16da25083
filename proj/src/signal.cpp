// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/signal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "mss/error.hpp"

namespace mss {

void StftConfig::validate() const {
  if (win_len <= 0 || fft_len <= 0) throw UsageError("STFT lengths must be positive");
  if (win_len > fft_len) {
    throw UsageError("STFT window (" + std::to_string(win_len) + ") exceeds FFT length (" +
                     std::to_string(fft_len) + ")");
  }
  if (hop <= 0 || hop > win_len) throw UsageError("STFT hop must satisfy 0 < hop <= win_len");
}

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.win_len), 1.0);
  if (cfg.win_len == 1) return w;
  const double denom = cfg.win_len - 1;
  for (int n = 0; n < cfg.win_len; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / denom);
  }
  return w;
}

int frame_count(std::size_t samples, const StftConfig& cfg) {
  if (samples <= static_cast<std::size_t>(cfg.win_len)) return 1;
  const std::size_t rest = samples - static_cast<std::size_t>(cfg.win_len);
  return 1 + static_cast<int>((rest + cfg.hop - 1) / cfg.hop);
}

std::size_t padded_length(int frames, const StftConfig& cfg) {
  return static_cast<std::size_t>(frames - 1) * cfg.hop + cfg.win_len;
}

ComplexSpectrogram stft(std::span<const double> samples, const StftConfig& cfg) {
  cfg.validate();
  if (samples.size() < static_cast<std::size_t>(cfg.hop)) {
    throw UsageError("signal of " + std::to_string(samples.size()) +
                     " samples is too short to frame (hop " + std::to_string(cfg.hop) + ")");
  }
  const int frames = frame_count(samples.size(), cfg);
  const auto window = analysis_window(cfg);
  detail::RealFft fft(cfg.fft_len);

  ComplexSpectrogram out;
  out.config = cfg;
  out.data.resize(frames, cfg.n_bins());
  std::vector<double> frame(static_cast<std::size_t>(cfg.win_len));
  for (int m = 0; m < frames; ++m) {
    const std::size_t start = static_cast<std::size_t>(m) * cfg.hop;
    for (int n = 0; n < cfg.win_len; ++n) {
      const std::size_t idx = start + n;
      frame[n] = idx < samples.size() ? samples[idx] * window[n] : 0.0;
    }
    fft.forward(frame, std::span(out.data.row(m).data(), cfg.n_bins()));
  }
  return out;
}

ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg) {
  return stft(std::span<const double>(clip.samples), cfg);
}

AudioClip istft(const ComplexSpectrogram& spec, int sample_rate) {
  const StftConfig& cfg = spec.config;
  cfg.validate();
  if (spec.data.cols() != cfg.n_bins()) {
    throw DimensionError("spectrogram has " + std::to_string(spec.data.cols()) +
                         " bins, config expects " + std::to_string(cfg.n_bins()));
  }
  const int frames = static_cast<int>(spec.data.rows());
  AudioClip out;
  out.sample_rate = sample_rate;
  if (frames == 0) return out;

  const auto window = analysis_window(cfg);
  const std::size_t len = padded_length(frames, cfg);
  out.samples.assign(len, 0.0);
  std::vector<double> envelope(len, 0.0);
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_len));
  detail::RealFft fft(cfg.fft_len);
  const double norm = 1.0 / cfg.fft_len;

  for (int m = 0; m < frames; ++m) {
    fft.inverse(std::span(spec.data.row(m).data(), cfg.n_bins()), buf);
    const std::size_t start = static_cast<std::size_t>(m) * cfg.hop;
    for (int n = 0; n < cfg.win_len; ++n) {
      out.samples[start + n] += buf[n] * norm * window[n];
      envelope[start + n] += window[n] * window[n];
    }
  }
  for (std::size_t i = 0; i < len; ++i) {
    if (envelope[i] >= 1e-10) out.samples[i] /= envelope[i];
  }
  return out;
}

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec) {
  return {spec.data.cwiseAbs()};
}

Matrix phase(const ComplexSpectrogram& spec) {
  return spec.data.unaryExpr([](const std::complex<double>& c) { return std::arg(c); });
}

MagnitudeSpectrogram truncate_bands(const MagnitudeSpectrogram& mag, int bands) {
  if (bands < 0 || bands > mag.bins()) {
    throw DimensionError("cannot keep " + std::to_string(bands) + " bands of " +
                         std::to_string(mag.bins()));
  }
  return {mag.data.leftCols(bands)};
}

SequenceBatch segment(const MagnitudeSpectrogram& mag, int seq_len, int context, int bands) {
  if (context < 0 || seq_len <= 2 * context) {
    throw UsageError("segment requires seq_len > 2 * context >= 0 (got T=" +
                     std::to_string(seq_len) + ", L=" + std::to_string(context) + ")");
  }
  if (bands < 0 || bands > mag.bins()) {
    throw DimensionError("cannot keep " + std::to_string(bands) + " bands of " +
                         std::to_string(mag.bins()));
  }
  SequenceBatch batch;
  batch.frame_count = static_cast<int>(mag.frames());
  batch.seq_len = seq_len;
  batch.context = context;

  const int stride = batch.stride();
  const int count = (batch.frame_count + stride - 1) / stride;
  const Eigen::Index bins = mag.bins();
  for (int b = 0; b < count; ++b) {
    Matrix full = Matrix::Zero(seq_len, bins);
    // Padded frame p maps to original frame p - context.
    for (int t = 0; t < seq_len; ++t) {
      const int src = b * stride + t - context;
      if (src >= 0 && src < batch.frame_count) full.row(t) = mag.data.row(src);
    }
    batch.trunc_input.push_back(full.leftCols(bands));
    batch.full_input.push_back(std::move(full));
  }
  return batch;
}

Matrix slice_context(const Matrix& x, int context) {
  if (context < 0 || x.rows() <= 2 * context) {
    throw UsageError("slice_context requires rows > 2 * context >= 0");
  }
  return x.middleRows(context, x.rows() - 2 * context);
}

MagnitudeSpectrogram overlap_concat(std::span<const Matrix> estimates, int frame_count) {
  Eigen::Index total = 0;
  Eigen::Index cols = estimates.empty() ? 0 : estimates.front().cols();
  for (const auto& e : estimates) {
    if (e.cols() != cols) throw DimensionError("overlap_concat: inconsistent bin counts");
    total += e.rows();
  }
  if (total < frame_count) {
    throw DimensionError("overlap_concat: " + std::to_string(total) +
                         " frames cannot cover " + std::to_string(frame_count));
  }
  MagnitudeSpectrogram out{Matrix(frame_count, cols)};
  Eigen::Index row = 0;
  for (const auto& e : estimates) {
    const Eigen::Index take = std::min<Eigen::Index>(e.rows(), frame_count - row);
    if (take <= 0) break;
    out.data.middleRows(row, take) = e.topRows(take);
    row += take;
  }
  return out;
}

namespace {
ComplexSpectrogram with_phase(const Matrix& mag, const Matrix& angles, const StftConfig& cfg) {
  ComplexSpectrogram out;
  out.config = cfg;
  out.data.resize(mag.rows(), mag.cols());
  for (Eigen::Index i = 0; i < mag.size(); ++i) {
    out.data.data()[i] = std::polar(mag.data()[i], angles.data()[i]);
  }
  return out;
}
}  // namespace

ComplexSpectrogram griffin_lim(const MagnitudeSpectrogram& mag, const Matrix& init_phase,
                               int iters, const StftConfig& cfg) {
  if (iters < 0) throw UsageError("griffin_lim iteration count must be >= 0");
  if (init_phase.rows() != mag.frames() || init_phase.cols() != mag.bins()) {
    throw DimensionError("griffin_lim: phase and magnitude shapes differ");
  }
  if (mag.bins() != cfg.n_bins()) throw DimensionError("griffin_lim: bin count mismatch");
  ComplexSpectrogram current = with_phase(mag.data, init_phase, cfg);
  for (int k = 0; k < iters; ++k) {
    const AudioClip signal = istft(current);
    const ComplexSpectrogram rebuilt = stft(signal, cfg);
    current = with_phase(mag.data, phase(rebuilt), cfg);
  }
  return current;
}

double consistency_error(const ComplexSpectrogram& spec, const MagnitudeSpectrogram& mag) {
  const ComplexSpectrogram rebuilt = stft(istft(spec), spec.config);
  return (rebuilt.data.cwiseAbs() - mag.data).norm();
}

MagnitudeSpectrogram wiener_mask(std::span<const MagnitudeSpectrogram> sources, std::size_t j,
                                 double alpha) {
  if (sources.empty() || j >= sources.size()) throw UsageError("wiener_mask: bad source index");
  if (!(alpha > 0)) throw UsageError("wiener_mask: alpha must be positive");
  const auto& ref = sources.front().data;
  for (const auto& s : sources) {
    if (s.data.rows() != ref.rows() || s.data.cols() != ref.cols()) {
      throw DimensionError("wiener_mask: source shapes differ");
    }
  }
  Matrix denom = Matrix::Zero(ref.rows(), ref.cols());
  for (const auto& s : sources) denom += s.data.array().pow(alpha).matrix();
  const Matrix numer = sources[j].data.array().pow(alpha).matrix();
  const double uniform = 1.0 / static_cast<double>(sources.size());
  return {numer.binaryExpr(denom, [uniform](double n, double d) {
    return d < kMaskEpsilon ? uniform : n / d;
  })};
}

MagnitudeSpectrogram irm_target(const MagnitudeSpectrogram& voice,
                                const MagnitudeSpectrogram& accomp,
                                const MagnitudeSpectrogram& mix) {
  const auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols();
  };
  if (!same(voice.data, accomp.data) || !same(voice.data, mix.data)) {
    throw DimensionError("irm_target: shapes differ");
  }
  const auto ratio = voice.data.array() / (voice.data.array() + accomp.data.array() + kMaskEpsilon);
  return {(2.0 * ratio * mix.data.array()).matrix()};
}

}  // namespace mss
