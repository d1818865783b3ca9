// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace svl {

/// Entry point behind the `svl` binary. Returns 0 on success, 2 on usage
/// errors and 1 on any other failure, which is reported on `err` as a single
/// line `error: <kind>: <message>`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace svl
