// Copyright 2026 The SVL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace svl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace svl
