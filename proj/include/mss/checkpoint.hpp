// Copyright 2026 The MSS Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// Binary checkpoint layout (all integers little-endian):
//
//   "MSS1"  u32 version  u32 tensor_count
//   per tensor: u16 name_len, name (UTF-8), u8 rank, rank x u32 dims,
//               prod(dims) x float32
//   u32 blob_len, blob (UTF-8 "key = value" lines: the run config followed
//   by "epoch" and "rng_state")

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mss/config.hpp"
#include "mss/model.hpp"

namespace mss {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;  // rank 1 for biases, rank 2 for matrices
  std::vector<float> data;

  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  RunConfig config;
  std::vector<NamedTensor> tensors;
  int epoch = 0;
  std::string rng_state;

  bool operator==(const Checkpoint&) const = default;
};

// Rounds every parameter to float32.
Checkpoint make_checkpoint(const model::ModelParams& params, const RunConfig& config, int epoch,
                           std::string rng_state = {});
// Rebuilds parameters; throws DimensionError when tensors do not match the
// dimensions implied by the stored config.
model::ModelParams params_from_checkpoint(const Checkpoint& ckpt);

std::string encode_checkpoint(const Checkpoint& ckpt);
// FormatError (with byte offset) on bad magic, unknown version or truncation.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mss
