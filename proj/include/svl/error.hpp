// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace svl {

enum class ErrorKind {
  kConfig,
  kInput,
  kAssetMissing,
  kDegenerateProjection,
  kNonFinite,
  kVersion,
  kIo,
};

/// Short lowercase tag used in the CLI's one-line error output.
const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SVL_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(Kind, message) {} \
  }

SVL_DEFINE_ERROR(ConfigError, ErrorKind::kConfig);
SVL_DEFINE_ERROR(InputError, ErrorKind::kInput);
SVL_DEFINE_ERROR(AssetMissingError, ErrorKind::kAssetMissing);
SVL_DEFINE_ERROR(DegenerateProjectionError, ErrorKind::kDegenerateProjection);
SVL_DEFINE_ERROR(NonFiniteError, ErrorKind::kNonFinite);
SVL_DEFINE_ERROR(VersionError, ErrorKind::kVersion);
SVL_DEFINE_ERROR(IoError, ErrorKind::kIo);

#undef SVL_DEFINE_ERROR

}  // namespace svl
