// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Masker (residual bi-GRU encoder, recurrent-inference GRU decoder,
// ReLU mask head, skip-filtering) followed by the multiplicative Denoiser.

#include <vector>

#include "mss/nn.hpp"

namespace mss::model {

using nn::Parameter;
using nn::Tape;
using nn::Tensor;

struct ModelDims {
  int n_bins = 2049;  // full-band width N
  int bands = 744;    // encoder width F
  int seq_len = 60;   // T
  int context = 10;   // L

  int code_dim() const { return 2 * bands; }
  int denoiser_dim() const { return n_bins / 2; }
  int out_frames() const { return seq_len - 2 * context; }
  // Throws UsageError on inconsistent values.
  void validate() const;

  bool operator==(const ModelDims&) const = default;
};

struct MaskerParams {
  nn::GruParams enc_fwd;  // F -> F
  nn::GruParams enc_bwd;  // F -> F
  nn::GruParams dec;      // 2F -> 2F
  Parameter W_mask;       // 2F x N
  Parameter b_mask;       // 1 x N
};

struct DenoiserParams {
  Parameter W_enc;  // N x N/2
  Parameter b_enc;
  Parameter W_dec;  // N/2 x N
  Parameter b_dec;
};

struct ModelParams {
  ModelDims dims;
  MaskerParams masker;
  DenoiserParams denoiser;

  // All weights and biases zero.
  static ModelParams zeros(const ModelDims& dims);
  // Orthogonal recurrent matrices, Glorot-normal other matrices, zero biases.
  static ModelParams initialized(const ModelDims& dims, nn::Rng& rng);

  // Stable order; names are unique and used as checkpoint keys.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

struct InferenceConfig {
  bool use_recurrent_inference = true;
  int iter = 3;
  double tau_term = 1e-2;

  static InferenceConfig nri() { return {false, 1, 0.0}; }
  static InferenceConfig ris_small() { return {true, 3, 1e-2}; }
  static InferenceConfig ris_large() { return {true, 10, 1e-3}; }

  void validate() const;
  bool operator==(const InferenceConfig&) const = default;
};

struct RecurrentInferenceResult {
  Tensor h_dec;
  Tensor first_state;  // S_0, the single-application decoder output
  int iterations = 0;  // loop iterations executed (0 without recurrent inference)
};

struct ForwardTrace {
  Tensor mask;      // T' x N
  Tensor filtered;  // T' x N
  Tensor denoised;  // T' x N
  int ri_iterations_used = 0;
};

// Residual bi-GRU over the rows of y_tr followed by context removal;
// returns T' x 2F. Row t concatenates (h_t + y_t) from the forward GRU with
// (hb_t + yb_t), where yb is the time-reversed input and hb_t the backward
// GRU state after consuming its first t frames.
Tensor encode(Tape& tape, const Matrix& y_tr, MaskerParams& p, int context);

// One application of the decoder GRU from a zero state.
Tensor decode_once(const Tensor& input, MaskerParams& p);

RecurrentInferenceResult recurrent_inference(const Tensor& h_enc, MaskerParams& p,
                                             const InferenceConfig& cfg);

Tensor predict_mask(const Tensor& h_dec, MaskerParams& p);
Tensor skip_filter(const Tensor& y_in_sliced, const Tensor& mask);
Tensor denoise(const Tensor& y_filt, DenoiserParams& p);

ForwardTrace forward(Tape& tape, const Matrix& y_tr, const Matrix& y_in, ModelParams& params,
                     const InferenceConfig& cfg);

}  // namespace mss::model
