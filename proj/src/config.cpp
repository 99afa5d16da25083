// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/config.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

#include "mss/error.hpp"

namespace mss {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kNri: return "nri";
    case Variant::kRisSmall: return "ris-s";
    case Variant::kRisLarge: return "ris-l";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  if (name == "nri") return Variant::kNri;
  if (name == "ris-s") return Variant::kRisSmall;
  if (name == "ris-l") return Variant::kRisLarge;
  throw UsageError("unknown variant '" + std::string(name) + "' (expected nri, ris-s or ris-l)");
}

model::InferenceConfig inference_for(Variant v) {
  switch (v) {
    case Variant::kNri: return model::InferenceConfig::nri();
    case Variant::kRisSmall: return model::InferenceConfig::ris_small();
    case Variant::kRisLarge: return model::InferenceConfig::ris_large();
  }
  throw UsageError("bad variant");
}

void RunConfig::set_variant(Variant v) {
  variant = v;
  inference = inference_for(v);
}

void RunConfig::validate() const {
  if (sample_rate <= 0) throw UsageError("sample_rate must be positive");
  stft.validate();
  dims().validate();
  inference.validate();
  if (train.batch_size <= 0 || train.epochs <= 0) {
    throw UsageError("batch_size and epochs must be positive");
  }
  if (!(train.learning_rate > 0) || !(train.clip_norm > 0)) {
    throw UsageError("learning_rate and clip_norm must be positive");
  }
  if (train.max_steps < 0) throw UsageError("max_steps must be >= 0");
  if (loss.tau_rec < 0 || loss.tau_min < 0 || loss.lambda_mask < 0 || loss.lambda_dec < 0 ||
      loss.kl_epsilon < 0) {
    throw UsageError("loss settings must be nonnegative");
  }
  if (eval.proj_filter_len < 1) throw UsageError("proj_filter_len must be >= 1");
  if (griffin_lim_iters < 0) throw UsageError("griffin_lim_iters must be >= 0");
}

RunConfig paper_profile() { return RunConfig{}; }

RunConfig desk_profile() {
  RunConfig cfg;
  cfg.profile = "desk";
  cfg.stft.win_len = 512;
  cfg.stft.fft_len = 1024;
  cfg.stft.hop = 128;
  cfg.bands = 186;
  cfg.seq_len = 30;
  cfg.context = 5;
  return cfg;
}

RunConfig profile_by_name(std::string_view name) {
  if (name == "paper") return paper_profile();
  if (name == "desk") return desk_profile();
  throw UsageError("unknown profile '" + std::string(name) + "' (expected paper or desk)");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T out{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("config key '" + std::string(key) + "': cannot parse '" +
                     std::string(text) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw UsageError("config key '" + std::string(key) + "': expected true/false");
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

template <typename T>
Setter number(T RunConfig::*field) {
  return [field](RunConfig& c, std::string_view k, std::string_view v) {
    c.*field = parse_number<T>(k, v);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"profile", [](RunConfig& c, auto, auto v) { c.profile = std::string(v); }},
      {"sample_rate", number(&RunConfig::sample_rate)},
      {"stft.win_len", [](RunConfig& c, auto k, auto v) { c.stft.win_len = parse_number<int>(k, v); }},
      {"stft.fft_len", [](RunConfig& c, auto k, auto v) { c.stft.fft_len = parse_number<int>(k, v); }},
      {"stft.hop", [](RunConfig& c, auto k, auto v) { c.stft.hop = parse_number<int>(k, v); }},
      {"stft.window",
       [](RunConfig& c, auto, auto v) {
         if (v != "hamming") throw UsageError("only the hamming window is supported");
         c.stft.window = Window::kHamming;
       }},
      {"model.bands", number(&RunConfig::bands)},
      {"model.seq_len", number(&RunConfig::seq_len)},
      {"model.context", number(&RunConfig::context)},
      {"inference.variant", [](RunConfig& c, auto, auto v) { c.set_variant(parse_variant(v)); }},
      {"inference.recurrent",
       [](RunConfig& c, auto k, auto v) { c.inference.use_recurrent_inference = parse_bool(k, v); }},
      {"inference.iter", [](RunConfig& c, auto k, auto v) { c.inference.iter = parse_number<int>(k, v); }},
      {"inference.tau_term",
       [](RunConfig& c, auto k, auto v) { c.inference.tau_term = parse_number<double>(k, v); }},
      {"loss.tau_rec", [](RunConfig& c, auto k, auto v) { c.loss.tau_rec = parse_number<double>(k, v); }},
      {"loss.tau_min", [](RunConfig& c, auto k, auto v) { c.loss.tau_min = parse_number<double>(k, v); }},
      {"loss.lambda_mask",
       [](RunConfig& c, auto k, auto v) { c.loss.lambda_mask = parse_number<double>(k, v); }},
      {"loss.lambda_dec",
       [](RunConfig& c, auto k, auto v) { c.loss.lambda_dec = parse_number<double>(k, v); }},
      {"loss.kl_epsilon",
       [](RunConfig& c, auto k, auto v) { c.loss.kl_epsilon = parse_number<double>(k, v); }},
      {"train.learning_rate",
       [](RunConfig& c, auto k, auto v) { c.train.learning_rate = parse_number<double>(k, v); }},
      {"train.batch_size",
       [](RunConfig& c, auto k, auto v) { c.train.batch_size = parse_number<int>(k, v); }},
      {"train.epochs", [](RunConfig& c, auto k, auto v) { c.train.epochs = parse_number<int>(k, v); }},
      {"train.clip_norm",
       [](RunConfig& c, auto k, auto v) { c.train.clip_norm = parse_number<double>(k, v); }},
      {"train.seed",
       [](RunConfig& c, auto k, auto v) { c.train.seed = parse_number<std::uint64_t>(k, v); }},
      {"train.max_steps",
       [](RunConfig& c, auto k, auto v) { c.train.max_steps = parse_number<int>(k, v); }},
      {"train.adam_beta1",
       [](RunConfig& c, auto k, auto v) { c.train.adam_beta1 = parse_number<double>(k, v); }},
      {"train.adam_beta2",
       [](RunConfig& c, auto k, auto v) { c.train.adam_beta2 = parse_number<double>(k, v); }},
      {"train.adam_epsilon",
       [](RunConfig& c, auto k, auto v) { c.train.adam_epsilon = parse_number<double>(k, v); }},
      {"eval.proj_filter_len",
       [](RunConfig& c, auto k, auto v) { c.eval.proj_filter_len = parse_number<int>(k, v); }},
      {"eval.full_track", [](RunConfig& c, auto k, auto v) { c.eval.full_track = parse_bool(k, v); }},
      {"post.griffin_lim_iters", number(&RunConfig::griffin_lim_iters)},
      {"paths.corpus", [](RunConfig& c, auto, auto v) { c.corpus_dir = std::string(v); }},
      {"paths.checkpoint", [](RunConfig& c, auto, auto v) { c.checkpoint_path = std::string(v); }},
      {"paths.output_dir", [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }},
  };
  return table;
}

}  // namespace

void apply_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw UsageError("unknown config key '" + std::string(key) + "'");
  it->second(cfg, key, value);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  const auto kv = [&out](std::string_view k, const std::string& v) {
    out << k << " = " << v << '\n';
  };
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  kv("profile", c.profile);
  kv("sample_rate", std::to_string(c.sample_rate));
  kv("stft.win_len", std::to_string(c.stft.win_len));
  kv("stft.fft_len", std::to_string(c.stft.fft_len));
  kv("stft.hop", std::to_string(c.stft.hop));
  kv("stft.window", "hamming");
  kv("model.bands", std::to_string(c.bands));
  kv("model.seq_len", std::to_string(c.seq_len));
  kv("model.context", std::to_string(c.context));
  kv("inference.variant", std::string(variant_name(c.variant)));
  kv("inference.recurrent", b(c.inference.use_recurrent_inference));
  kv("inference.iter", std::to_string(c.inference.iter));
  kv("inference.tau_term", format_double(c.inference.tau_term));
  kv("loss.tau_rec", format_double(c.loss.tau_rec));
  kv("loss.tau_min", format_double(c.loss.tau_min));
  kv("loss.lambda_mask", format_double(c.loss.lambda_mask));
  kv("loss.lambda_dec", format_double(c.loss.lambda_dec));
  kv("loss.kl_epsilon", format_double(c.loss.kl_epsilon));
  kv("train.learning_rate", format_double(c.train.learning_rate));
  kv("train.batch_size", std::to_string(c.train.batch_size));
  kv("train.epochs", std::to_string(c.train.epochs));
  kv("train.clip_norm", format_double(c.train.clip_norm));
  kv("train.seed", std::to_string(c.train.seed));
  kv("train.max_steps", std::to_string(c.train.max_steps));
  kv("train.adam_beta1", format_double(c.train.adam_beta1));
  kv("train.adam_beta2", format_double(c.train.adam_beta2));
  kv("train.adam_epsilon", format_double(c.train.adam_epsilon));
  kv("eval.proj_filter_len", std::to_string(c.eval.proj_filter_len));
  kv("eval.full_track", b(c.eval.full_track));
  kv("post.griffin_lim_iters", std::to_string(c.griffin_lim_iters));
  kv("paths.corpus", c.corpus_dir);
  kv("paths.checkpoint", c.checkpoint_path);
  kv("paths.output_dir", c.output_dir);
  return out.str();
}

RunConfig parse_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_value(base, trim(std::string_view(content).substr(0, eq)),
                       trim(std::string_view(content).substr(eq + 1)));
  }
  return base;
}

}  // namespace mss
