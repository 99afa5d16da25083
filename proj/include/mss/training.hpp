// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "mss/checkpoint.hpp"
#include "mss/config.hpp"
#include "mss/model.hpp"
#include "mss/signal.hpp"

namespace mss::training {

using nn::Tensor;

// Generalized KL divergence summed over entries; see nn::gkl.
double gkl(const Matrix& target, const Matrix& estimate, double eps);

struct LossDiagnostics {
  double kl_denoised = 0;  // D(target || denoised)
  double kl_filtered = 0;  // D(target || filtered)
  double lambda_rec = 0;   // realized gate, 0 or 1
  double mask_diag_l1 = 0;
  double dec_sq_norm = 0;
  double total = 0;
};

// 1 when kl_filtered >= tau_rec and kl_denoised >= tau_min, else 0.
double reconstruction_gate(double kl_filtered, double kl_denoised, const LossConfig& cfg);

// D(t||denoised) + gate * D(t||filtered) + lambda_mask |diag W_mask|_1
//   + lambda_dec ||W_dec||^2. The gate is a constant w.r.t. differentiation.
Tensor compute_loss(const Matrix& target, const model::ForwardTrace& trace,
                    model::ModelParams& params, const LossConfig& cfg,
                    LossDiagnostics* diagnostics = nullptr);

struct TrainingExample {
  Matrix mix_tr;  // T x F
  Matrix mix_in;  // T x N
  Matrix target;  // T' x N, context removed
};

// Mixes voice + accompaniment (trimmed to the shorter), builds the doubled
// ideal-ratio-mask target and cuts both into aligned subsequences.
std::vector<TrainingExample> build_examples(const AudioClip& voice, const AudioClip& accomp,
                                            const RunConfig& cfg);

struct Track {
  std::string id;
  AudioClip voice;
  AudioClip accompaniment;
};

// Each subdirectory holding vocals.wav plus accompaniment.wav (or
// bass.wav + drums.wav + other.wav, summed) is one track; sorted by name.
std::vector<Track> load_corpus(const std::filesystem::path& dir);

struct EpochMetrics {
  int epoch = 0;
  int steps = 0;
  double mean_loss = 0;
  double mean_lambda_rec = 0;
  double mean_ri_iters = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochMetrics> epochs;
  std::vector<double> step_losses;  // mean batch loss before each update
};

struct TrainHooks {
  // Called after every epoch with the checkpoint of that epoch.
  std::function<void(const Checkpoint&, const EpochMetrics&)> on_epoch;
};

// Mean-of-batch loss, backward, global norm clipping, Adam. Shuffles the
// examples every epoch with the seeded generator. Throws NumericError on a
// non-finite loss and UsageError on an empty corpus.
TrainResult train(const std::vector<Track>& corpus, const RunConfig& cfg,
                  const TrainHooks& hooks = {}, const Checkpoint* resume = nullptr);

// Lower-level loop over prepared examples, starting from `params`.
TrainResult train_examples(const std::vector<TrainingExample>& examples,
                           model::ModelParams& params, const RunConfig& cfg, nn::Rng& rng,
                           const TrainHooks& hooks = {}, int first_epoch = 1);

// Mean loss over the examples without updating anything.
double evaluate_loss(const std::vector<TrainingExample>& examples, model::ModelParams& params,
                     const RunConfig& cfg);

struct SeparationStats {
  std::vector<int> ri_iterations;  // per subsequence
  double mean_iterations() const;
  int max_iterations() const;
};

// STFT, per-subsequence forward pass, reassembly, Griffin-Lim from the
// mixture phase and inverse STFT. Output length equals input length.
AudioClip separate(const AudioClip& mixture, const Checkpoint& ckpt,
                   SeparationStats* stats = nullptr);
AudioClip separate(const AudioClip& mixture, model::ModelParams& params, const RunConfig& cfg,
                   SeparationStats* stats = nullptr);

}  // namespace mss::training
