// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "mss/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "mss/error.hpp"

namespace mss {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'S', '1'};

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t le(int bytes, const char* what) {
    need(static_cast<std::size_t>(bytes), what);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("checkpoint: " + msg + " at byte offset " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Checkpoint make_checkpoint(const model::ModelParams& params, const RunConfig& config, int epoch,
                           std::string rng_state) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.epoch = epoch;
  ckpt.rng_state = std::move(rng_state);
  for (const nn::Parameter* p : params.parameters()) {
    NamedTensor t;
    t.name = p->name;
    if (p->value.rows() == 1) {
      t.dims = {static_cast<std::uint32_t>(p->value.cols())};
    } else {
      t.dims = {static_cast<std::uint32_t>(p->value.rows()),
                static_cast<std::uint32_t>(p->value.cols())};
    }
    t.data.resize(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      t.data[static_cast<std::size_t>(i)] = static_cast<float>(p->value.data()[i]);
    }
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

model::ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ckpt.config.validate();
  model::ModelParams params = model::ModelParams::zeros(ckpt.config.dims());
  std::map<std::string, const NamedTensor*, std::less<>> by_name;
  for (const auto& t : ckpt.tensors) by_name.emplace(t.name, &t);
  const auto list = params.parameters();
  if (by_name.size() != list.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(by_name.size()) +
                         " tensors, model expects " + std::to_string(list.size()));
  }
  for (nn::Parameter* p : list) {
    const auto it = by_name.find(p->name);
    if (it == by_name.end()) throw DimensionError("checkpoint is missing tensor " + p->name);
    const NamedTensor& t = *it->second;
    const std::uint32_t rows = t.dims.size() == 2 ? t.dims[0] : 1;
    const std::uint32_t cols = t.dims.empty() ? 0 : t.dims.back();
    if (t.dims.empty() || t.dims.size() > 2 || rows != p->value.rows() ||
        cols != p->value.cols()) {
      throw DimensionError("checkpoint tensor " + p->name + " does not match the configured " +
                           std::to_string(p->value.rows()) + "x" +
                           std::to_string(p->value.cols()) + " shape");
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] = static_cast<double>(t.data[static_cast<std::size_t>(i)]);
    }
  }
  return params;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, 4);
  put_le(out, kCheckpointVersion, 4);
  put_le(out, ckpt.tensors.size(), 4);
  for (const NamedTensor& t : ckpt.tensors) {
    if (t.name.size() > 0xFFFF) throw UsageError("tensor name too long: " + t.name);
    put_le(out, t.name.size(), 2);
    out += t.name;
    put_le(out, t.dims.size(), 1);
    std::size_t count = 1;
    for (std::uint32_t d : t.dims) {
      put_le(out, d, 4);
      count *= d;
    }
    if (count != t.data.size()) throw DimensionError("tensor " + t.name + ": dims/data mismatch");
    for (float v : t.data) {
      std::uint32_t raw;
      std::memcpy(&raw, &v, sizeof raw);
      put_le(out, raw, 4);
    }
  }
  std::string blob = serialize_config(ckpt.config);
  blob += "epoch = " + std::to_string(ckpt.epoch) + "\n";
  blob += "rng_state = " + ckpt.rng_state + "\n";
  put_le(out, blob.size(), 4);
  out += blob;
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string_view(kMagic, 4)) {
    throw FormatError("checkpoint: bad magic at byte offset 0");
  }
  const auto version = in.le(4, "version");
  if (version != kCheckpointVersion) {
    in.fail("unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto count = in.le(4, "tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto name_len = in.le(2, "tensor name length");
    t.name = std::string(in.take(name_len, "tensor name"));
    const auto rank = in.le(1, "tensor rank");
    std::size_t elems = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      t.dims.push_back(static_cast<std::uint32_t>(in.le(4, "tensor dims")));
      elems *= t.dims.back();
    }
    const auto payload = in.take(elems * 4, "tensor payload");
    t.data.resize(elems);
    for (std::size_t k = 0; k < elems; ++k) {
      std::uint32_t raw = 0;
      for (int b = 0; b < 4; ++b) {
        raw |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[4 * k + b])) << (8 * b);
      }
      std::memcpy(&t.data[k], &raw, sizeof raw);
    }
    ckpt.tensors.push_back(std::move(t));
  }
  const auto blob_len = in.le(4, "config length");
  const std::string blob(in.take(blob_len, "config blob"));
  if (!in.done()) in.fail("trailing bytes after config blob");

  // Split off the checkpoint-only keys, hand the rest to the config parser.
  std::string config_text;
  std::size_t start = 0;
  while (start < blob.size()) {
    auto end = blob.find('\n', start);
    if (end == std::string::npos) end = blob.size();
    const std::string line = blob.substr(start, end - start);
    start = end + 1;
    if (line.rfind("epoch = ", 0) == 0) {
      try {
        ckpt.epoch = std::stoi(line.substr(8));
      } catch (const std::exception&) {
        throw FormatError("checkpoint: malformed epoch record");
      }
    } else if (line.rfind("rng_state = ", 0) == 0) {
      ckpt.rng_state = line.substr(12);
    } else {
      config_text += line;
      config_text += '\n';
    }
  }
  try {
    ckpt.config = parse_config(config_text, RunConfig{});
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint: bad config blob: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace mss
