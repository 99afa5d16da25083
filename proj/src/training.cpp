// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mss/error.hpp"

namespace mss::training {

namespace fs = std::filesystem;

double gkl(const Matrix& target, const Matrix& estimate, double eps) {
  return nn::gkl_value(target, estimate, eps);
}

double reconstruction_gate(double kl_filtered, double kl_denoised, const LossConfig& cfg) {
  return (kl_filtered >= cfg.tau_rec && kl_denoised >= cfg.tau_min) ? 1.0 : 0.0;
}

Tensor compute_loss(const Matrix& target, const model::ForwardTrace& trace,
                    model::ModelParams& params, const LossConfig& cfg,
                    LossDiagnostics* diagnostics) {
  nn::Tape& tape = trace.denoised.tape();
  const Tensor kl_den = nn::gkl(target, trace.denoised, cfg.kl_epsilon);
  const Tensor kl_filt = nn::gkl(target, trace.filtered, cfg.kl_epsilon);
  const double gate = reconstruction_gate(kl_filt.item(), kl_den.item(), cfg);
  const Tensor mask_l1 = nn::diag_abs_sum(tape.param(params.masker.W_mask));
  const Tensor dec_l2 = nn::sum_squares(tape.param(params.denoiser.W_dec));

  Tensor loss = nn::add(kl_den, nn::scale(kl_filt, gate));
  loss = nn::add(loss, nn::scale(mask_l1, cfg.lambda_mask));
  loss = nn::add(loss, nn::scale(dec_l2, cfg.lambda_dec));

  if (diagnostics != nullptr) {
    diagnostics->kl_denoised = kl_den.item();
    diagnostics->kl_filtered = kl_filt.item();
    diagnostics->lambda_rec = gate;
    diagnostics->mask_diag_l1 = mask_l1.item();
    diagnostics->dec_sq_norm = dec_l2.item();
    diagnostics->total = loss.item();
  }
  return loss;
}

namespace {

void require_rate(const AudioClip& clip, const RunConfig& cfg, const char* what) {
  if (clip.sample_rate != cfg.sample_rate) {
    throw UsageError(std::string(what) + " has sample rate " + std::to_string(clip.sample_rate) +
                     " Hz; expected " + std::to_string(cfg.sample_rate) +
                     " Hz (resampling is not supported)");
  }
}

AudioClip sum_clips(const std::vector<AudioClip>& clips) {
  AudioClip out = clips.front();
  for (std::size_t i = 1; i < clips.size(); ++i) {
    if (clips[i].sample_rate != out.sample_rate) {
      throw UsageError("accompaniment stems have different sample rates");
    }
    out.samples.resize(std::min(out.size(), clips[i].size()));
    for (std::size_t k = 0; k < out.size(); ++k) out.samples[k] += clips[i].samples[k];
  }
  return out;
}

}  // namespace

std::vector<TrainingExample> build_examples(const AudioClip& voice, const AudioClip& accomp,
                                            const RunConfig& cfg) {
  cfg.validate();
  require_rate(voice, cfg, "voice");
  require_rate(accomp, cfg, "accompaniment");
  const std::size_t len = std::min(voice.size(), accomp.size());
  std::vector<double> v(voice.samples.begin(), voice.samples.begin() + len);
  std::vector<double> a(accomp.samples.begin(), accomp.samples.begin() + len);
  std::vector<double> mix(len);
  for (std::size_t i = 0; i < len; ++i) mix[i] = v[i] + a[i];

  const MagnitudeSpectrogram mix_mag = magnitude(stft(mix, cfg.stft));
  const MagnitudeSpectrogram target =
      irm_target(magnitude(stft(v, cfg.stft)), magnitude(stft(a, cfg.stft)), mix_mag);

  const SequenceBatch mix_seq = segment(mix_mag, cfg.seq_len, cfg.context, cfg.bands);
  const SequenceBatch target_seq = segment(target, cfg.seq_len, cfg.context, cfg.bands);
  std::vector<TrainingExample> out;
  out.reserve(mix_seq.size());
  for (std::size_t b = 0; b < mix_seq.size(); ++b) {
    out.push_back({mix_seq.trunc_input[b], mix_seq.full_input[b],
                   slice_context(target_seq.full_input[b], cfg.context)});
  }
  return out;
}

std::vector<Track> load_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
  std::vector<fs::path> track_dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "vocals.wav")) {
      track_dirs.push_back(entry.path());
    }
  }
  std::sort(track_dirs.begin(), track_dirs.end());

  std::vector<Track> tracks;
  for (const fs::path& t : track_dirs) {
    Track track;
    track.id = t.filename().string();
    track.voice = read_wav(t / "vocals.wav");
    if (fs::exists(t / "accompaniment.wav")) {
      track.accompaniment = read_wav(t / "accompaniment.wav");
    } else {
      std::vector<AudioClip> stems;
      for (const char* name : {"bass.wav", "drums.wav", "other.wav"}) {
        if (!fs::exists(t / name)) {
          throw IoError("track " + track.id + " has neither accompaniment.wav nor " + name);
        }
        stems.push_back(read_wav(t / name));
      }
      track.accompaniment = sum_clips(stems);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

namespace {

std::string rng_state(const nn::Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void check_finite(double loss, int epoch, int step) {
  if (!std::isfinite(loss)) {
    throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                       std::to_string(step));
  }
}

}  // namespace

TrainResult train_examples(const std::vector<TrainingExample>& examples,
                           model::ModelParams& params, const RunConfig& cfg, nn::Rng& rng,
                           const TrainHooks& hooks, int first_epoch) {
  cfg.validate();
  if (examples.empty()) throw UsageError("training corpus produced no examples");
  const auto plist = params.parameters();
  for (nn::Parameter* p : plist) p->zero_grad();
  const nn::AdamConfig adam{cfg.train.learning_rate, cfg.train.adam_beta1, cfg.train.adam_beta2,
                            cfg.train.adam_epsilon};

  TrainResult result;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  int total_steps = 0;
  const std::size_t batch = static_cast<std::size_t>(cfg.train.batch_size);
  int epoch = first_epoch;
  for (; epoch <= cfg.train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochMetrics m;
    m.epoch = epoch;
    double loss_sum = 0, gate_sum = 0, iter_sum = 0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const double weight = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0;
      for (std::size_t k = start; k < end; ++k) {
        const TrainingExample& ex = examples[order[k]];
        nn::Tape tape;
        const model::ForwardTrace trace =
            model::forward(tape, ex.mix_tr, ex.mix_in, params, cfg.inference);
        LossDiagnostics diag;
        const Tensor loss = compute_loss(ex.target, trace, params, cfg.loss, &diag);
        check_finite(diag.total, epoch, total_steps + 1);
        tape.backward(nn::scale(loss, weight));
        batch_loss += diag.total * weight;
        gate_sum += diag.lambda_rec;
        iter_sum += trace.ri_iterations_used;
        loss_sum += diag.total;
        ++seen;
      }
      nn::clip_grad_norm(plist, cfg.train.clip_norm);
      nn::adam_step(plist, adam);
      result.step_losses.push_back(batch_loss);
      ++m.steps;
      ++total_steps;
      if (cfg.train.max_steps > 0 && total_steps >= cfg.train.max_steps) break;
    }
    m.mean_loss = loss_sum / static_cast<double>(seen);
    m.mean_lambda_rec = gate_sum / static_cast<double>(seen);
    m.mean_ri_iters = iter_sum / static_cast<double>(seen);
    result.epochs.push_back(m);
    const bool last = epoch == cfg.train.epochs ||
                      (cfg.train.max_steps > 0 && total_steps >= cfg.train.max_steps);
    if (hooks.on_epoch || last) {
      Checkpoint ckpt = make_checkpoint(params, cfg, epoch, rng_state(rng));
      if (hooks.on_epoch) hooks.on_epoch(ckpt, m);
      if (last) result.checkpoint = std::move(ckpt);
    }
    if (last) break;
  }
  if (result.checkpoint.tensors.empty()) {
    // Resumed past the final epoch: nothing to run.
    result.checkpoint = make_checkpoint(params, cfg, epoch - 1, rng_state(rng));
  }
  return result;
}

TrainResult train(const std::vector<Track>& corpus, const RunConfig& cfg, const TrainHooks& hooks,
                  const Checkpoint* resume) {
  cfg.validate();
  if (corpus.empty()) throw UsageError("training corpus is empty");
  std::vector<TrainingExample> examples;
  for (const Track& t : corpus) {
    auto ex = build_examples(t.voice, t.accompaniment, cfg);
    std::move(ex.begin(), ex.end(), std::back_inserter(examples));
  }

  nn::Rng rng(cfg.train.seed);
  model::ModelParams params;
  int first_epoch = 1;
  if (resume != nullptr) {
    if (resume->config.dims() != cfg.dims()) {
      throw DimensionError("resume checkpoint dimensions differ from the run configuration");
    }
    params = params_from_checkpoint(*resume);
    first_epoch = resume->epoch + 1;
    if (!resume->rng_state.empty()) {
      std::istringstream in(resume->rng_state);
      in >> rng;
      if (!in) throw FormatError("checkpoint rng_state is malformed");
    }
  } else {
    params = model::ModelParams::initialized(cfg.dims(), rng);
  }
  return train_examples(examples, params, cfg, rng, hooks, first_epoch);
}

double evaluate_loss(const std::vector<TrainingExample>& examples, model::ModelParams& params,
                     const RunConfig& cfg) {
  if (examples.empty()) throw UsageError("no examples to evaluate");
  double sum = 0;
  for (const TrainingExample& ex : examples) {
    nn::Tape tape(false);
    const auto trace = model::forward(tape, ex.mix_tr, ex.mix_in, params, cfg.inference);
    sum += compute_loss(ex.target, trace, params, cfg.loss).item();
  }
  return sum / static_cast<double>(examples.size());
}

double SeparationStats::mean_iterations() const {
  if (ri_iterations.empty()) return 0.0;
  return std::accumulate(ri_iterations.begin(), ri_iterations.end(), 0.0) /
         static_cast<double>(ri_iterations.size());
}

int SeparationStats::max_iterations() const {
  return ri_iterations.empty() ? 0 : *std::max_element(ri_iterations.begin(), ri_iterations.end());
}

AudioClip separate(const AudioClip& mixture, model::ModelParams& params, const RunConfig& cfg,
                   SeparationStats* stats) {
  cfg.validate();
  validate(mixture);
  require_rate(mixture, cfg, "mixture");
  if (params.dims != cfg.dims()) {
    throw DimensionError("model dimensions do not match the run configuration");
  }
  const ComplexSpectrogram mix_spec = stft(mixture, cfg.stft);
  const MagnitudeSpectrogram mix_mag = magnitude(mix_spec);
  const SequenceBatch seq = segment(mix_mag, cfg.seq_len, cfg.context, cfg.bands);

  std::vector<Matrix> estimates;
  estimates.reserve(seq.size());
  for (std::size_t b = 0; b < seq.size(); ++b) {
    nn::Tape tape(false);
    const auto trace =
        model::forward(tape, seq.trunc_input[b], seq.full_input[b], params, cfg.inference);
    estimates.push_back(trace.denoised.value());
    if (stats != nullptr) stats->ri_iterations.push_back(trace.ri_iterations_used);
  }
  const MagnitudeSpectrogram voice_mag = overlap_concat(estimates, seq.frame_count);
  const ComplexSpectrogram voice_spec =
      griffin_lim(voice_mag, phase(mix_spec), cfg.griffin_lim_iters, cfg.stft);
  AudioClip out = istft(voice_spec, mixture.sample_rate);
  out.samples.resize(mixture.size(), 0.0);
  return out;
}

AudioClip separate(const AudioClip& mixture, const Checkpoint& ckpt, SeparationStats* stats) {
  model::ModelParams params = params_from_checkpoint(ckpt);
  return separate(mixture, params, ckpt.config, stats);
}

}  // namespace mss::training
