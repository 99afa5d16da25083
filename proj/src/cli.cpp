// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "mss/checkpoint.hpp"
#include "mss/config.hpp"
#include "mss/error.hpp"
#include "mss/eval.hpp"
#include "mss/training.hpp"

namespace mss::cli {
namespace {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// Profile first, then the config file, then explicit flags.
struct ConfigFlags {
  std::string profile;
  std::string config_file;
  std::string variant;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> max_steps;
  std::optional<double> learning_rate;
  std::vector<std::string> overrides;  // key=value

  void attach(CLI::App& cmd) {
    cmd.add_option("--profile", profile, "Base profile: paper or desk");
    cmd.add_option("--config", config_file, "Plain-text key = value config file");
    cmd.add_option("--variant", variant, "nri, ris-s or ris-l");
    cmd.add_option("--seed", seed, "Random seed");
    cmd.add_option("--epochs", epochs, "Number of epochs");
    cmd.add_option("--max-steps", max_steps, "Stop after this many optimizer steps");
    cmd.add_option("--lr", learning_rate, "Adam learning rate");
    cmd.add_option("--set", overrides, "Extra key=value config overrides");
  }

  RunConfig resolve() const {
    std::string file_text;
    std::string base = profile;
    if (!config_file.empty()) {
      file_text = read_text(config_file);
      if (base.empty()) {
        // A "profile = ..." line in the file picks the base when no flag does.
        const RunConfig probe = parse_config(file_text, RunConfig{});
        if (probe.profile != RunConfig{}.profile) base = probe.profile;
      }
    }
    RunConfig cfg = profile_by_name(base.empty() ? "paper" : base);
    if (!file_text.empty()) cfg = parse_config(file_text, cfg);
    if (!profile.empty()) cfg.profile = profile;
    if (!variant.empty()) cfg.set_variant(parse_variant(variant));
    if (seed) cfg.train.seed = *seed;
    if (epochs) cfg.train.epochs = *epochs;
    if (max_steps) cfg.train.max_steps = *max_steps;
    if (learning_rate) cfg.train.learning_rate = *learning_rate;
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
  }
};

int cmd_train(const ConfigFlags& flags, const std::string& corpus, const std::string& out_path,
              const std::string& resume_path, std::string log_path, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  cfg.corpus_dir = corpus;
  cfg.checkpoint_path = out_path;
  if (!fs::is_directory(corpus)) throw IoError("corpus directory not found: " + corpus);
  const auto tracks = training::load_corpus(corpus);
  if (tracks.empty()) throw UsageError("corpus contains no tracks: " + corpus);

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) resume = load_checkpoint(resume_path);

  if (log_path.empty()) log_path = out_path + ".metrics.txt";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot write metrics log: " + log_path);
  log << "# epoch mean_loss mean_lambda_rec mean_ri_iters\n";

  training::TrainHooks hooks;
  hooks.on_epoch = [&](const Checkpoint& ckpt, const training::EpochMetrics& m) {
    save_checkpoint(out_path, ckpt);
    log << m.epoch << ' ' << format_double(m.mean_loss) << ' ' << format_double(m.mean_lambda_rec)
        << ' ' << format_double(m.mean_ri_iters) << '\n';
    log.flush();
    out << "epoch " << m.epoch << ": loss " << m.mean_loss << ", lambda_rec "
        << m.mean_lambda_rec << ", ri_iters " << m.mean_ri_iters << '\n';
  };
  out << "training " << tracks.size() << " track(s), profile " << cfg.profile << ", variant "
      << variant_name(cfg.variant) << " (iter=" << cfg.inference.iter
      << ", tau_term=" << format_double(cfg.inference.tau_term) << ")\n";
  const auto result = training::train(tracks, cfg, hooks, resume ? &*resume : nullptr);
  save_checkpoint(out_path, result.checkpoint);
  out << "wrote " << out_path << '\n';
  return kExitOk;
}

int cmd_separate(const std::string& model_path, const std::string& input,
                 const std::string& output, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(model_path);
  const AudioClip mix = read_wav(input);
  training::SeparationStats stats;
  const AudioClip voice = training::separate(mix, ckpt, &stats);
  write_wav(voice, output);
  out << "wrote " << output << " (" << voice.size() << " samples)\n";
  out << "recurrent inference: " << stats.ri_iterations.size() << " subsequences, mean "
      << stats.mean_iterations() << " iterations, max " << stats.max_iterations() << '\n';
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& corpus,
                 const std::string& report, bool oracle, std::ostream& out) {
  std::optional<Checkpoint> ckpt;
  RunConfig cfg;
  if (!oracle) {
    if (model_path.empty()) throw UsageError("evaluate needs --model unless --oracle is given");
    ckpt = load_checkpoint(model_path);
    cfg = ckpt->config;
  }
  const auto tracks = training::load_corpus(corpus);
  if (tracks.empty()) throw UsageError("corpus contains no tracks: " + corpus);

  std::vector<eval::SeparationScore> scores;
  for (const auto& t : tracks) {
    const std::size_t n = std::min(t.voice.size(), t.accompaniment.size());
    AudioClip voice{{t.voice.samples.begin(), t.voice.samples.begin() + n}, t.voice.sample_rate};
    AudioClip accomp{{t.accompaniment.samples.begin(), t.accompaniment.samples.begin() + n},
                     t.accompaniment.sample_rate};
    AudioClip mix = voice;
    for (std::size_t i = 0; i < n; ++i) mix.samples[i] += accomp.samples[i];
    const AudioClip estimate = oracle ? voice : training::separate(mix, *ckpt);
    const std::vector<AudioClip> refs = {voice, accomp};
    scores.push_back(eval::sdr_sir(estimate, refs, 0, cfg.eval, t.id));
  }
  const auto summary = eval::median_report(scores);
  const std::string label = oracle ? "oracle" : model_path;
  const std::string text = eval::format_report_text(scores, summary, label);
  write_text(report, eval::format_report_json(scores, summary, label, serialize_config(cfg)));
  write_text(report + ".txt", text);
  out << text;
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monaural singing-voice separation with skip-filtering masks"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  std::string corpus, out_path, resume, log_path;
  auto* train = app.add_subcommand("train", "Train a model on a corpus of stems");
  train->add_option("--corpus", corpus, "Directory of track folders")->required();
  train->add_option("--out", out_path, "Checkpoint output path")->required();
  train->add_option("--resume", resume, "Checkpoint to continue from");
  train->add_option("--log", log_path, "Per-epoch metrics log (default OUT.metrics.txt)");
  train_flags.attach(*train);

  std::string model_path, input, output;
  auto* separate = app.add_subcommand("separate", "Extract the singing voice from a mixture");
  separate->add_option("--model", model_path, "Checkpoint")->required();
  separate->add_option("--input", input, "Mixture WAV (44.1 kHz)")->required();
  separate->add_option("--output", output, "Output voice WAV (float32)")->required();

  std::string eval_model, eval_corpus, report;
  bool oracle = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score a model with SDR/SIR");
  evaluate->add_option("--model", eval_model, "Checkpoint");
  evaluate->add_option("--corpus", eval_corpus, "Directory of track folders")->required();
  evaluate->add_option("--report", report, "JSON report path (table also written to REPORT.txt)")
      ->required();
  evaluate->add_flag("--oracle", oracle, "Score the true vocals instead of a model");

  ConfigFlags show_flags;
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  show_flags.attach(*show);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    const auto used = app.get_subcommands();
    out << (used.empty() ? app.help() : used.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_flags, corpus, out_path, resume, log_path, out);
    if (*separate) return cmd_separate(model_path, input, output, out);
    if (*evaluate) return cmd_evaluate(eval_model, eval_corpus, report, oracle, out);
    if (*show) {
      out << serialize_config(show_flags.resolve());
      return kExitOk;
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace mss::cli
