// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svl/trainer.hpp"

namespace svl {

// Checkpoint container, little-endian:
//
//   magic            8 bytes  "SVLCKPT\0"
//   format_version   u32
//   config_length    u64, followed by the key=value config snapshot
//   iteration        i64
//   tensor_count     u32
//   per tensor:
//     name_length u32, name bytes
//     dtype       u8   (0 = float64, 1 = float32)
//     rank        u32, then rank x u64 dims
//     data        prod(dims) values, column-major
//
// Trainable tensors use their parameter names; optimizer momentum buffers
// are stored under "momentum/<name>".
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;
};

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::string config_text;
  std::int64_t iteration = 0;
  std::vector<NamedTensor> tensors;
};

Checkpoint make_checkpoint(TrainState& state, const std::string& config_text);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies tensors into `state`, whose shapes act as the template. A missing
/// tensor, shape mismatch or unknown format version raises VersionError.
void restore_state(const Checkpoint& ckpt, TrainState& state);

}  // namespace svl
