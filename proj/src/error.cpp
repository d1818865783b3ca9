// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include "svl/error.hpp"

namespace svl {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInput: return "input";
    case ErrorKind::kAssetMissing: return "asset_missing";
    case ErrorKind::kDegenerateProjection: return "degenerate_projection";
    case ErrorKind::kNonFinite: return "non_finite";
    case ErrorKind::kVersion: return "version";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace svl
