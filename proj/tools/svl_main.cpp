// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "svl/cli.hpp"

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("svl"));
  return svl::run_cli(argc, argv, std::cout, std::cerr);
}
