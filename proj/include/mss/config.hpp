// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mss/model.hpp"
#include "mss/signal.hpp"

namespace mss {

enum class Variant { kNri, kRisSmall, kRisLarge };

std::string_view variant_name(Variant v);  // "nri", "ris-s", "ris-l"
Variant parse_variant(std::string_view name);
model::InferenceConfig inference_for(Variant v);

struct LossConfig {
  double tau_rec = 1.5;
  double tau_min = 0.25;
  double lambda_mask = 1e-2;
  double lambda_dec = 1e-4;
  double kl_epsilon = 1e-12;

  bool operator==(const LossConfig&) const = default;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 16;
  int epochs = 100;
  double clip_norm = 0.5;
  std::uint64_t seed = 0;
  // Stop after this many optimizer steps; 0 runs all epochs.
  int max_steps = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  bool operator==(const TrainConfig&) const = default;
};

struct EvalConfig {
  int proj_filter_len = 512;
  bool full_track = true;

  bool operator==(const EvalConfig&) const = default;
};

struct RunConfig {
  std::string profile = "paper";
  int sample_rate = kPaperSampleRate;
  StftConfig stft;
  int bands = 744;
  int seq_len = 60;
  int context = 10;
  Variant variant = Variant::kRisLarge;
  model::InferenceConfig inference = model::InferenceConfig::ris_large();
  LossConfig loss;
  TrainConfig train;
  EvalConfig eval;
  int griffin_lim_iters = 10;
  std::string corpus_dir;
  std::string checkpoint_path;
  std::string output_dir;

  model::ModelDims dims() const { return {stft.n_bins(), bands, seq_len, context}; }
  void set_variant(Variant v);
  // Cross-field checks (F <= n_bins, T > 2L, positive sizes); throws UsageError.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

// Window 2049 / FFT 4096 / hop 384, F 744, T 60, L 10, and the published
// optimizer and loss settings.
RunConfig paper_profile();
// Reduced dimensions for tests: window 512 / FFT 1024 / hop 128, F 186,
// T 30, L 5.
RunConfig desk_profile();
RunConfig profile_by_name(std::string_view name);

// Plain-text "key = value" document, one field per line, '#' comments.
std::string serialize_config(const RunConfig& cfg);
// Applies the keys found in `text` on top of `base`. Unknown keys and
// malformed values throw UsageError.
RunConfig parse_config(std::string_view text, RunConfig base);
void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

std::string format_double(double v);

}  // namespace mss
