// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <limits>
#include <random>
#include <tuple>

#include "gradcheck.hpp"
#include "mss/error.hpp"
#include "mss/training.hpp"

using namespace mss;
using namespace mss::training;
using mss::testing::random_matrix;

namespace {

RunConfig tiny_config() {
  RunConfig cfg = desk_profile();
  cfg.profile = "tiny";
  cfg.stft = {16, 18, 4, Window::kHamming};  // 10 bins
  cfg.bands = 6;
  cfg.seq_len = 8;
  cfg.context = 2;
  cfg.set_variant(Variant::kRisSmall);
  cfg.train.batch_size = 2;
  cfg.train.epochs = 1;
  return cfg;
}

AudioClip tone(double freq, std::size_t n, double amp = 0.5) {
  AudioClip c;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = amp * std::sin(2 * std::numbers::pi * freq * i / 44100.0);
  return c;
}

AudioClip noise(std::size_t n, unsigned seed, double amp = 0.2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, amp);
  AudioClip c;
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(d(rng));
  return c;
}

model::ForwardTrace constant_trace(nn::Tape& tape, const Matrix& filtered, const Matrix& denoised) {
  model::ForwardTrace t;
  t.mask = tape.constant(Matrix::Ones(filtered.rows(), filtered.cols()));
  t.filtered = tape.constant(filtered);
  t.denoised = tape.constant(denoised);
  return t;
}

}  // namespace

TEST_CASE("generalized KL divergence") {
  const Matrix a = Matrix::Constant(1, 1, 2.0), b = Matrix::Constant(1, 1, 1.0);
  CHECK(gkl(a, b, 1e-12) == doctest::Approx(2 * std::log(2.0) - 1).epsilon(1e-9));
  CHECK(2 * std::log(2.0) - 1 == doctest::Approx(0.386294).epsilon(1e-6));
  CHECK(gkl(Matrix::Zero(1, 1), b, 1e-12) == doctest::Approx(1.0));
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = random_matrix(4, 5, rng, 0.0, 1.0);
    const Matrix y = random_matrix(4, 5, rng, 0.0, 1.0);
    CHECK(std::abs(gkl(x, x, 1e-12)) <= 1e-9);
    CHECK(gkl(x, y, 1e-12) >= -1e-6);
  }
  CHECK_THROWS_AS(gkl(Matrix::Constant(1, 1, -1.0), b, 1e-12), NumericError);
}

TEST_CASE("reconstruction gate truth table") {
  const LossConfig cfg;
  CHECK(reconstruction_gate(2.0, 0.5, cfg) == 1.0);
  CHECK(reconstruction_gate(1.0, 0.5, cfg) == 0.0);
  CHECK(reconstruction_gate(2.0, 0.1, cfg) == 0.0);
  CHECK(reconstruction_gate(1.0, 0.1, cfg) == 0.0);
  CHECK(reconstruction_gate(1.5, 0.25, cfg) == 1.0);
  CHECK(reconstruction_gate(1.0, 100.0, cfg) == 0.0);

  // Through compute_loss: with a zero target each KL equals the estimate sum.
  model::ModelParams p = model::ModelParams::zeros({10, 6, 8, 2});
  const Matrix target = Matrix::Zero(1, 1);
  for (auto [kf, kd, expected] : {std::tuple{2.0, 0.5, 1.0}, {1.0, 0.5, 0.0}, {2.0, 0.1, 0.0}, {1.0, 0.1, 0.0}}) {
    nn::Tape tape(false);
    LossDiagnostics diag;
    const double total = compute_loss(target, constant_trace(tape, Matrix::Constant(1, 1, kf), Matrix::Constant(1, 1, kd)),
                                      p, cfg, &diag)
                             .item();
    CHECK(diag.kl_filtered == doctest::Approx(kf));
    CHECK(diag.kl_denoised == doctest::Approx(kd));
    CHECK(diag.lambda_rec == expected);
    CHECK(total == doctest::Approx(kd + expected * kf));
  }
}

TEST_CASE("loss vanishes on a perfect estimate with zero weights") {
  model::ModelParams p = model::ModelParams::zeros({10, 6, 8, 2});
  std::mt19937_64 rng(2);
  const Matrix t = random_matrix(4, 10, rng, 0.0, 2.0);
  nn::Tape tape(false);
  LossDiagnostics diag;
  const double loss = compute_loss(t, constant_trace(tape, t, t), p, LossConfig{}, &diag).item();
  CHECK(std::abs(loss) < 1e-9);
  CHECK(diag.lambda_rec == 0.0);
}

TEST_CASE("regularizers: mask diagonal and decoder weight decay") {
  model::ModelParams p = model::ModelParams::zeros({10, 6, 8, 2});
  std::mt19937_64 rng(3);
  p.masker.W_mask.value = random_matrix(12, 10, rng);
  p.denoiser.W_dec.value = random_matrix(5, 10, rng);
  const LossConfig cfg;
  const Matrix zero = Matrix::Zero(4, 10);
  nn::Tape tape;
  LossDiagnostics diag;
  const nn::Tensor loss = compute_loss(zero, constant_trace(tape, zero, zero), p, cfg, &diag);
  double diag_l1 = 0;
  for (int i = 0; i < 10; ++i) diag_l1 += std::abs(p.masker.W_mask.value(i, i));
  CHECK(diag.mask_diag_l1 == doctest::Approx(diag_l1).epsilon(1e-12));
  CHECK(diag.dec_sq_norm == doctest::Approx(p.denoiser.W_dec.value.squaredNorm()).epsilon(1e-12));
  CHECK(loss.item() == doctest::Approx(cfg.lambda_mask * diag_l1 + cfg.lambda_dec * diag.dec_sq_norm));
  tape.backward(loss);
  CHECK((p.denoiser.W_dec.grad - 2 * cfg.lambda_dec * p.denoiser.W_dec.value).cwiseAbs().maxCoeff() < 1e-15);

  // The same term through the full forward with silent input.
  const mss::testing::Objective f = [&](nn::Tape& t) {
    const auto trace = model::forward(t, Matrix::Zero(8, 6), Matrix::Zero(8, 10), p, model::InferenceConfig::nri());
    return compute_loss(zero, trace, p, cfg);
  };
  const auto check = mss::testing::check_gradients(f, {&p.denoiser.W_dec, &p.masker.W_mask});
  CHECK(check.max_rel_error < 1e-4);
  CHECK((p.denoiser.W_dec.grad - 2 * cfg.lambda_dec * p.denoiser.W_dec.value).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("compute_loss gradients on both sides of the gate") {
  nn::Rng init(4);
  model::ModelParams p = model::ModelParams::initialized({10, 6, 8, 2}, init);
  p.masker.b_mask.value.setConstant(0.5);
  p.denoiser.b_dec.value.setConstant(0.5);
  std::mt19937_64 rng(4);
  const Matrix y_in = random_matrix(8, 10, rng, 0.1, 1.5);
  const Matrix target = random_matrix(4, 10, rng, 0.1, 1.5);
  for (double tau_rec : {0.0, 1e9}) {
    LossConfig cfg;
    cfg.tau_rec = tau_rec;
    cfg.tau_min = 0.0;
    double gate = -1;
    const mss::testing::Objective f = [&](nn::Tape& t) {
      const auto trace = model::forward(t, y_in.leftCols(6), y_in, p, model::InferenceConfig{true, 2, 0.0});
      LossDiagnostics d;
      const nn::Tensor loss = compute_loss(target, trace, p, cfg, &d);
      gate = d.lambda_rec;
      return loss;
    };
    const auto check = mss::testing::check_gradients(f, p.parameters());
    INFO("worst " << check.worst);
    CHECK(check.max_rel_error < 1e-4);
    CHECK(gate == (tau_rec == 0.0 ? 1.0 : 0.0));
  }
}

TEST_CASE("build_examples") {
  const RunConfig cfg = tiny_config();
  const AudioClip v = tone(3000.0, 400);
  const AudioClip a = noise(500, 5);
  const auto examples = build_examples(v, a, cfg);
  const int frames = frame_count(400, cfg.stft);
  const int expected_b = (frames + cfg.seq_len - 2 * cfg.context - 1) / (cfg.seq_len - 2 * cfg.context);
  CHECK(examples.size() == static_cast<std::size_t>(expected_b));
  for (const auto& ex : examples) {
    CHECK(ex.mix_tr.rows() == 8);
    CHECK(ex.mix_tr.cols() == 6);
    CHECK(ex.mix_in.cols() == 10);
    CHECK(ex.target.rows() == 4);
    CHECK(ex.mix_tr == ex.mix_in.leftCols(6));
    CHECK(ex.target.minCoeff() >= 0.0);
  }

  const AudioClip silent{std::vector<double>(400, 0.0)};
  for (const auto& ex : build_examples(v, silent, cfg)) {
    const Matrix mix = slice_context(ex.mix_in, cfg.context);
    CHECK((ex.target - 2.0 * mix).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, mix.maxCoeff()));
  }
  for (const auto& ex : build_examples(silent, a, cfg)) CHECK(ex.target.maxCoeff() < 1e-9);

  AudioClip wrong = v;
  wrong.sample_rate = 22050;
  CHECK_THROWS_AS(build_examples(wrong, a, cfg), UsageError);
}

TEST_CASE("single-example overfit") {
  RunConfig cfg = tiny_config();
  cfg.train.batch_size = 1;
  cfg.train.epochs = 50;
  cfg.train.learning_rate = 1e-2;
  const auto examples = build_examples(tone(5000.0, 28), noise(28, 6), cfg);
  REQUIRE(examples.size() == 1);
  nn::Rng rng(7);
  model::ModelParams params = model::ModelParams::initialized(cfg.dims(), rng);
  const double before = evaluate_loss(examples, params, cfg);
  const TrainResult r = train_examples(examples, params, cfg, rng);
  const double after = evaluate_loss(examples, params, cfg);
  CHECK(r.step_losses.size() == 50);
  CHECK(r.epochs.size() == 50);
  CHECK(r.step_losses.front() == doctest::Approx(before).epsilon(1e-12));
  CHECK(after < 0.5 * before);
}

TEST_CASE("training is deterministic for a fixed seed") {
  RunConfig cfg = tiny_config();
  cfg.train.epochs = 2;
  cfg.train.seed = 11;
  const std::vector<Track> corpus{{"a", tone(2000.0, 300), noise(300, 1)}, {"b", tone(7000.0, 260), noise(260, 2)}};
  const TrainResult r1 = train(corpus, cfg);
  const TrainResult r2 = train(corpus, cfg);
  CHECK(r1.step_losses == r2.step_losses);
  CHECK(r1.epochs[0].mean_loss == r2.epochs[0].mean_loss);
  CHECK(r1.checkpoint == r2.checkpoint);
  cfg.train.seed = 12;
  CHECK(train(corpus, cfg).step_losses != r1.step_losses);

  cfg.train.max_steps = 3;
  cfg.train.epochs = 100;
  CHECK(train(corpus, cfg).step_losses.size() == 3);
}

TEST_CASE("a vanishing learning rate leaves parameters unchanged") {
  RunConfig cfg = tiny_config();
  cfg.train.batch_size = 1;
  cfg.train.learning_rate = 1e-300;
  const auto examples = build_examples(tone(5000.0, 44), noise(44, 8), cfg);
  nn::Rng rng(9);
  model::ModelParams params = model::ModelParams::initialized(cfg.dims(), rng);
  const model::ModelParams before = params;
  cfg.train.max_steps = 1;
  train_examples(examples, params, cfg, rng);
  const auto a = params.parameters();
  const auto b = before.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i]->value - b[i]->value).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("training errors") {
  RunConfig cfg = tiny_config();
  CHECK_THROWS_AS(train({}, cfg), UsageError);
  model::ModelParams params = model::ModelParams::zeros(cfg.dims());
  nn::Rng rng(0);
  CHECK_THROWS_AS(train_examples({}, params, cfg, rng), UsageError);
  auto examples = build_examples(tone(5000.0, 44), noise(44, 8), cfg);
  examples[0].mix_in(3, 3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train_examples(examples, params, cfg, rng), NumericError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/corpus"), IoError);
}

TEST_CASE("separation output length and silence") {
  RunConfig cfg = tiny_config();
  model::ModelParams zero = model::ModelParams::zeros(cfg.dims());
  const AudioClip mix = noise(333, 10);
  SeparationStats stats;
  const AudioClip out = separate(mix, zero, cfg, &stats);
  CHECK(out.size() == mix.size());
  for (double s : out.samples) CHECK(s == 0.0);
  CHECK(stats.ri_iterations.size() == segment(magnitude(stft(mix, cfg.stft)), 8, 2, 6).size());
  CHECK(stats.max_iterations() == 1);

  nn::Rng rng(1);
  model::ModelParams p = model::ModelParams::initialized(cfg.dims(), rng);
  CHECK(separate(mix, p, cfg).size() == mix.size());
  model::ModelParams wrong = model::ModelParams::zeros({10, 5, 8, 2});
  CHECK_THROWS_AS(separate(mix, wrong, cfg), DimensionError);
}
