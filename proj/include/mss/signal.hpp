// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <span>
#include <vector>

#include "mss/types.hpp"
#include "mss/wav.hpp"

namespace mss {

enum class Window { kHamming };

struct StftConfig {
  int win_len = 2049;
  int fft_len = 4096;
  int hop = 384;
  Window window = Window::kHamming;

  int n_bins() const { return fft_len / 2 + 1; }
  // Throws UsageError unless win_len <= fft_len and 0 < hop <= win_len.
  void validate() const;

  bool operator==(const StftConfig&) const = default;
};

struct ComplexSpectrogram {
  ComplexMatrix data;  // frames x n_bins
  StftConfig config;

  Eigen::Index frames() const { return data.rows(); }
};

struct MagnitudeSpectrogram {
  Matrix data;  // frames x bins, nonnegative

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index bins() const { return data.cols(); }
};

// Subsequences of a magnitude spectrogram, each seq_len frames long, placed
// every seq_len - 2*context frames so that their de-contexted middles tile
// frame_count frames.
struct SequenceBatch {
  std::vector<Matrix> full_input;   // seq_len x n_bins each
  std::vector<Matrix> trunc_input;  // seq_len x bands each
  int frame_count = 0;
  int seq_len = 0;
  int context = 0;

  std::size_t size() const { return full_input.size(); }
  int stride() const { return seq_len - 2 * context; }
};

// Symmetric Hamming window: 0.54 - 0.46 cos(2 pi n / (len - 1)).
std::vector<double> analysis_window(const StftConfig& cfg);

// Number of frames stft produces for a signal of `samples` samples.
int frame_count(std::size_t samples, const StftConfig& cfg);
// Signal length covered by `frames` frames: (frames - 1) * hop + win_len.
std::size_t padded_length(int frames, const StftConfig& cfg);

ComplexSpectrogram stft(const AudioClip& clip, const StftConfig& cfg);
ComplexSpectrogram stft(std::span<const double> samples, const StftConfig& cfg);

// Least-squares overlap-add inverse. Returns padded_length(frames) samples at
// the given rate.
AudioClip istft(const ComplexSpectrogram& spec, int sample_rate = kPaperSampleRate);

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec);
Matrix phase(const ComplexSpectrogram& spec);

MagnitudeSpectrogram truncate_bands(const MagnitudeSpectrogram& mag, int bands);

SequenceBatch segment(const MagnitudeSpectrogram& mag, int seq_len, int context, int bands);

// Rows context .. rows - context - 1 (zero-based).
Matrix slice_context(const Matrix& x, int context);

MagnitudeSpectrogram overlap_concat(std::span<const Matrix> estimates, int frame_count);

// Alternating projections from init_phase; iters == 0 returns
// mag * exp(i * init_phase).
ComplexSpectrogram griffin_lim(const MagnitudeSpectrogram& mag, const Matrix& init_phase,
                               int iters, const StftConfig& cfg);

// Frobenius distance between |stft(istft(spec))| and `mag`.
double consistency_error(const ComplexSpectrogram& spec, const MagnitudeSpectrogram& mag);

inline constexpr double kMaskEpsilon = 1e-12;

// Generalized Wiener mask |Y_j|^a / sum_k |Y_k|^a. Bins whose denominator is
// below kMaskEpsilon get 1/J.
MagnitudeSpectrogram wiener_mask(std::span<const MagnitudeSpectrogram> sources, std::size_t j,
                                 double alpha);

// Training target: 2 * voice / (voice + accomp + eps) * mix.
MagnitudeSpectrogram irm_target(const MagnitudeSpectrogram& voice,
                                const MagnitudeSpectrogram& accomp,
                                const MagnitudeSpectrogram& mix);

}  // namespace mss
