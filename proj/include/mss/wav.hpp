// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <vector>

namespace mss {

inline constexpr int kPaperSampleRate = 44100;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kPaperSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Throws UsageError on a non-positive rate or non-finite samples.
void validate(const AudioClip& clip);

// Reads PCM16 or IEEE float32 RIFF/WAVE; multi-channel input is averaged to
// mono and PCM is scaled by 1/32768.
AudioClip read_wav(const std::filesystem::path& path);

// Writes mono IEEE float32. Values outside [-1, 1] are kept as is.
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

}  // namespace mss
