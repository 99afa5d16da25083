// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mss/checkpoint.hpp"
#include "mss/cli.hpp"
#include "mss/eval.hpp"
#include "mss/wav.hpp"

using namespace mss;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "mss_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

AudioClip voice_clip(std::size_t n, double freq) {
  AudioClip c;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 44100.0;
    c.samples.push_back(0.4 * std::sin(2 * std::numbers::pi * freq * t) * (0.6 + 0.4 * std::sin(2 * std::numbers::pi * 3 * t)));
  }
  return c;
}

AudioClip noise_clip(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, 0.1);
  AudioClip c;
  for (std::size_t i = 0; i < n; ++i) c.samples.push_back(d(rng));
  return c;
}

// Three short tracks; the last one uses separate stems.
fs::path make_corpus(const fs::path& root) {
  const std::size_t n = 11025;
  for (int k = 0; k < 3; ++k) {
    const fs::path t = root / ("track" + std::to_string(k));
    fs::create_directories(t);
    write_wav(voice_clip(n, 300.0 + 150 * k), t / "vocals.wav");
    if (k < 2) {
      write_wav(noise_clip(n, k), t / "accompaniment.wav");
    } else {
      write_wav(noise_clip(n, 10), t / "bass.wav");
      write_wav(noise_clip(n, 11), t / "drums.wav");
      write_wav(noise_clip(n, 12), t / "other.wav");
    }
  }
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> quick_train(const fs::path& corpus, const fs::path& out) {
  return {"train", "--corpus", corpus.string(), "--profile", "desk", "--variant", "ris-s", "--seed", "7",
          "--out", out.string(), "--max-steps", "2", "--set", "train.batch_size=2"};
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  const Result none = run({});
  CHECK(none.code == cli::kExitUsage);
  CHECK(run({"bogus"}).code == cli::kExitUsage);
  CHECK(run({"train", "--corpus", "x"}).code == cli::kExitUsage);

  const fs::path dir = scratch("usage");
  const Result missing = run({"train", "--corpus", "/no/such/corpus_dir", "--out", (dir / "m.ckpt").string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/no/such/corpus_dir") != std::string::npos);

  CHECK(run({"config", "--variant", "ris-xl"}).code == 2);
  CHECK(run({"config", "--set", "model.bands"}).code == 2);
  CHECK(run({"config", "--set", "no.such.key=1"}).code == 2);
  CHECK(run({"config", "--config", (dir / "absent.cfg").string()}).code == 2);
  CHECK(run({"train", "--help"}).out.find("--corpus") != std::string::npos);
}

TEST_CASE("config command and variants") {
  const Result r = run({"config", "--variant", "ris-l"});
  REQUIRE(r.code == 0);
  const RunConfig cfg = parse_config(r.out, RunConfig{});
  CHECK(cfg.variant == Variant::kRisLarge);
  CHECK(cfg.inference.iter == 10);
  CHECK(cfg.inference.tau_term == 1e-3);
  CHECK(cfg.inference.use_recurrent_inference);

  const RunConfig small = parse_config(run({"config", "--variant", "ris-s"}).out, RunConfig{});
  CHECK(small.inference.iter == 3);
  CHECK(small.inference.tau_term == 1e-2);
  const RunConfig nri = parse_config(run({"config", "--variant", "nri"}).out, RunConfig{});
  CHECK_FALSE(nri.inference.use_recurrent_inference);

  // Flags override the file, which overrides the profile.
  const fs::path dir = scratch("config");
  std::ofstream(dir / "run.cfg") << "profile = desk\ntrain.learning_rate = 0.002\ntrain.seed = 5\n";
  const RunConfig layered =
      parse_config(run({"config", "--config", (dir / "run.cfg").string(), "--seed", "9"}).out, RunConfig{});
  CHECK(layered.profile == "desk");
  CHECK(layered.bands == 186);
  CHECK(layered.train.learning_rate == 0.002);
  CHECK(layered.train.seed == 9);
}

TEST_CASE("paper profile round-trips through serialization") {
  const Result r = run({"config", "--profile", "paper"});
  REQUIRE(r.code == 0);
  const RunConfig c = parse_config(r.out, desk_profile());
  CHECK(c.stft.n_bins() == 2049);
  CHECK(c.stft.hop == 384);
  CHECK(c.bands == 744);
  CHECK(c.seq_len == 60);
  CHECK(c.context == 10);
  CHECK(c.train.learning_rate == 1e-4);
  CHECK(c.train.batch_size == 16);
  CHECK(c.train.clip_norm == 0.5);
  CHECK(c.loss.tau_rec == 1.5);
  CHECK(c.loss.tau_min == 0.25);
  CHECK(c.loss.lambda_mask == 1e-2);
  CHECK(c.loss.lambda_dec == 1e-4);
  CHECK(c == paper_profile());
}

TEST_CASE("train is deterministic and writes a metrics log") {
  const fs::path dir = scratch("train");
  const fs::path corpus = make_corpus(dir / "corpus");
  const Result a = run(quick_train(corpus, dir / "a.ckpt"));
  INFO(a.err);
  REQUIRE(a.code == 0);
  const std::string first = slurp(dir / "a.ckpt");
  REQUIRE(run(quick_train(corpus, dir / "a.ckpt")).code == 0);
  CHECK(slurp(dir / "a.ckpt") == first);

  const Checkpoint ckpt = load_checkpoint(dir / "a.ckpt");
  CHECK(ckpt.config.profile == "desk");
  CHECK(ckpt.config.train.seed == 7);
  CHECK(ckpt.config.inference == model::InferenceConfig::ris_small());

  std::istringstream log(slurp(dir / "a.ckpt.metrics.txt"));
  std::string header, line;
  std::getline(log, header);
  CHECK(header == "# epoch mean_loss mean_lambda_rec mean_ri_iters");
  REQUIRE(std::getline(log, line));
  std::istringstream rec(line);
  int epoch;
  double loss, gate, iters;
  rec >> epoch >> loss >> gate >> iters;
  CHECK(epoch == 1);
  CHECK(std::isfinite(loss));
  CHECK(gate >= 0.0);
  CHECK(gate <= 1.0);
  CHECK(iters >= 1.0);
  CHECK(iters <= 3.0);

  const Result resumed = run({"train", "--corpus", corpus.string(), "--profile", "desk", "--variant", "ris-s",
                              "--resume", (dir / "a.ckpt").string(), "--out", (dir / "c.ckpt").string(),
                              "--max-steps", "1", "--epochs", "2", "--set", "train.batch_size=2"});
  CHECK(resumed.code == 0);
  CHECK(load_checkpoint(dir / "c.ckpt").epoch == 2);
}

TEST_CASE("separate") {
  const fs::path dir = scratch("separate");
  const RunConfig cfg = desk_profile();
  save_checkpoint(dir / "zero.ckpt", make_checkpoint(model::ModelParams::zeros(cfg.dims()), cfg, 0));
  write_wav(noise_clip(9000, 3), dir / "mix.wav");

  const Result r = run({"separate", "--model", (dir / "zero.ckpt").string(), "--input", (dir / "mix.wav").string(),
                        "--output", (dir / "voice.wav").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("recurrent inference") != std::string::npos);
  const AudioClip voice = read_wav(dir / "voice.wav");
  CHECK(voice.size() == 9000);
  for (double s : voice.samples) CHECK(s == 0.0);

  AudioClip slow = noise_clip(9000, 4);
  slow.sample_rate = 22050;
  write_wav(slow, dir / "slow.wav");
  const Result rate = run({"separate", "--model", (dir / "zero.ckpt").string(), "--input", (dir / "slow.wav").string(),
                           "--output", (dir / "x.wav").string()});
  CHECK(rate.code == 2);
  CHECK(rate.err.find("22050") != std::string::npos);

  CHECK(run({"separate", "--model", (dir / "nope.ckpt").string(), "--input", (dir / "mix.wav").string(), "--output",
             (dir / "x.wav").string()})
            .code == 2);
}

TEST_CASE("evaluate reports per-track rows and the median") {
  const fs::path dir = scratch("evaluate");
  const fs::path corpus = make_corpus(dir / "corpus");
  REQUIRE(run(quick_train(corpus, dir / "m.ckpt")).code == 0);

  const Result r = run({"evaluate", "--model", (dir / "m.ckpt").string(), "--corpus", corpus.string(), "--report",
                        (dir / "report.json").string()});
  INFO(r.err);
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(dir / "report.json"));
  REQUIRE(doc["tracks"].size() == 3);
  std::vector<double> sdrs;
  for (const auto& t : doc["tracks"]) sdrs.push_back(t["sdr"].get<double>());
  CHECK(doc["summary"]["median_sdr"].get<double>() == eval::median(sdrs));
  CHECK(doc["config"].get<std::string>().find("profile = desk") != std::string::npos);

  const std::string table = slurp(dir / "report.json.txt");
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 1 + 3 + 1);
  CHECK(table.find("track2") != std::string::npos);

  const Result oracle = run({"evaluate", "--oracle", "--corpus", corpus.string(), "--report",
                             (dir / "oracle.json").string()});
  REQUIRE(oracle.code == 0);
  const auto odoc = nlohmann::json::parse(slurp(dir / "oracle.json"));
  for (const auto& t : odoc["tracks"]) {
    CHECK(t["sdr"] == "inf");
    CHECK(t["sir"] == "inf");
  }

  fs::create_directories(dir / "empty");
  CHECK(run({"evaluate", "--oracle", "--corpus", (dir / "empty").string(), "--report", (dir / "e.json").string()})
            .code == 2);
}
