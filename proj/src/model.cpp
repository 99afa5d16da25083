// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/model.hpp"

#include <string>

#include "mss/error.hpp"
#include "mss/signal.hpp"

namespace mss::model {

void ModelDims::validate() const {
  if (n_bins <= 1) throw UsageError("n_bins must be > 1");
  if (bands <= 0 || bands > n_bins) {
    throw UsageError("bands must satisfy 0 < F <= n_bins (F=" + std::to_string(bands) +
                     ", n_bins=" + std::to_string(n_bins) + ")");
  }
  if (context < 0 || seq_len <= 2 * context) {
    throw UsageError("sequence length must exceed twice the context (T=" +
                     std::to_string(seq_len) + ", L=" + std::to_string(context) + ")");
  }
}

void InferenceConfig::validate() const {
  if (use_recurrent_inference && iter < 1) throw UsageError("iter must be >= 1");
  if (!(tau_term >= 0)) throw UsageError("tau_term must be >= 0");
}

ModelParams ModelParams::zeros(const ModelDims& dims) {
  dims.validate();
  const int f = dims.bands;
  const int code = dims.code_dim();
  const int n = dims.n_bins;
  const int half = dims.denoiser_dim();
  ModelParams m;
  m.dims = dims;
  m.masker.enc_fwd = nn::GruParams("masker.enc_fwd", f, f);
  m.masker.enc_bwd = nn::GruParams("masker.enc_bwd", f, f);
  m.masker.dec = nn::GruParams("masker.dec", code, code);
  m.masker.W_mask = Parameter("masker.W_mask", Matrix::Zero(code, n));
  m.masker.b_mask = Parameter("masker.b_mask", Matrix::Zero(1, n));
  m.denoiser.W_enc = Parameter("denoiser.W_enc", Matrix::Zero(n, half));
  m.denoiser.b_enc = Parameter("denoiser.b_enc", Matrix::Zero(1, half));
  m.denoiser.W_dec = Parameter("denoiser.W_dec", Matrix::Zero(half, n));
  m.denoiser.b_dec = Parameter("denoiser.b_dec", Matrix::Zero(1, n));
  return m;
}

ModelParams ModelParams::initialized(const ModelDims& dims, nn::Rng& rng) {
  dims.validate();
  ModelParams m = zeros(dims);
  const int f = dims.bands;
  const int code = dims.code_dim();
  m.masker.enc_fwd = nn::GruParams::initialized("masker.enc_fwd", f, f, rng);
  m.masker.enc_bwd = nn::GruParams::initialized("masker.enc_bwd", f, f, rng);
  m.masker.dec = nn::GruParams::initialized("masker.dec", code, code, rng);
  m.masker.W_mask.value = nn::init_glorot_normal(code, dims.n_bins, rng);
  m.denoiser.W_enc.value = nn::init_glorot_normal(dims.n_bins, dims.denoiser_dim(), rng);
  m.denoiser.W_dec.value = nn::init_glorot_normal(dims.denoiser_dim(), dims.n_bins, rng);
  return m;
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  for (nn::GruParams* g : {&masker.enc_fwd, &masker.enc_bwd, &masker.dec}) {
    for (Parameter* p : g->parameters()) out.push_back(p);
  }
  for (Parameter* p : {&masker.W_mask, &masker.b_mask, &denoiser.W_enc, &denoiser.b_enc,
                       &denoiser.W_dec, &denoiser.b_dec}) {
    out.push_back(p);
  }
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  auto mutable_list = const_cast<ModelParams*>(this)->parameters();
  return {mutable_list.begin(), mutable_list.end()};
}

Tensor encode(Tape& tape, const Matrix& y_tr, MaskerParams& p, int context) {
  if (y_tr.cols() != p.enc_fwd.input_dim) {
    throw DimensionError("encode: input has " + std::to_string(y_tr.cols()) +
                         " bands, encoder expects " + std::to_string(p.enc_fwd.input_dim));
  }
  if (context < 0 || y_tr.rows() <= 2 * context) {
    throw UsageError("encode: sequence too short for the context");
  }
  const Tensor x = tape.constant(y_tr);
  const Tensor fwd = add(nn::gru_sequence(x, p.enc_fwd, false), x);
  // gru_sequence aligns reversed outputs with their input frames; flipping
  // back puts the state after t reversed frames at row t.
  const Tensor bwd = nn::reverse_rows(add(nn::gru_sequence(x, p.enc_bwd, true), x));
  const Tensor h_enc = nn::concat_cols(fwd, bwd);
  return nn::slice_rows(h_enc, context, h_enc.rows() - context);
}

Tensor decode_once(const Tensor& input, MaskerParams& p) {
  return nn::gru_sequence(input, p.dec, false);
}

RecurrentInferenceResult recurrent_inference(const Tensor& h_enc, MaskerParams& p,
                                             const InferenceConfig& cfg) {
  cfg.validate();
  RecurrentInferenceResult result;
  result.first_state = decode_once(h_enc, p);
  result.h_dec = result.first_state;
  if (!cfg.use_recurrent_inference) return result;

  Tensor state = result.first_state;
  for (int i = 1; i <= cfg.iter; ++i) {
    result.h_dec = decode_once(state, p);
    result.iterations = i;
    const double change =
        (state.value() - result.h_dec.value()).squaredNorm() / static_cast<double>(state.value().size());
    if (change < cfg.tau_term) break;
    state = result.h_dec;
  }
  return result;
}

Tensor predict_mask(const Tensor& h_dec, MaskerParams& p) {
  Tape& tape = h_dec.tape();
  return nn::relu(nn::add_bias(nn::matmul(h_dec, tape.param(p.W_mask)), tape.param(p.b_mask)));
}

Tensor skip_filter(const Tensor& y_in_sliced, const Tensor& mask) {
  return nn::hadamard(y_in_sliced, mask);
}

Tensor denoise(const Tensor& y_filt, DenoiserParams& p) {
  Tape& tape = y_filt.tape();
  const Tensor enc =
      nn::relu(nn::add_bias(nn::matmul(y_filt, tape.param(p.W_enc)), tape.param(p.b_enc)));
  const Tensor gain =
      nn::relu(nn::add_bias(nn::matmul(enc, tape.param(p.W_dec)), tape.param(p.b_dec)));
  return nn::hadamard(gain, y_filt);
}

ForwardTrace forward(Tape& tape, const Matrix& y_tr, const Matrix& y_in, ModelParams& params,
                     const InferenceConfig& cfg) {
  const ModelDims& d = params.dims;
  if (y_tr.rows() != d.seq_len || y_tr.cols() != d.bands || y_in.rows() != d.seq_len ||
      y_in.cols() != d.n_bins) {
    throw DimensionError("forward: expected inputs " + std::to_string(d.seq_len) + "x" +
                         std::to_string(d.bands) + " and " + std::to_string(d.seq_len) + "x" +
                         std::to_string(d.n_bins) + ", got " + std::to_string(y_tr.rows()) +
                         "x" + std::to_string(y_tr.cols()) + " and " +
                         std::to_string(y_in.rows()) + "x" + std::to_string(y_in.cols()));
  }
  const Tensor h_enc = encode(tape, y_tr, params.masker, d.context);
  const RecurrentInferenceResult ri = recurrent_inference(h_enc, params.masker, cfg);

  ForwardTrace trace;
  trace.ri_iterations_used = ri.iterations;
  trace.mask = predict_mask(ri.h_dec, params.masker);
  trace.filtered = skip_filter(tape.constant(slice_context(y_in, d.context)), trace.mask);
  trace.denoised = denoise(trace.filtered, params.denoiser);
  return trace;
}

}  // namespace mss::model
