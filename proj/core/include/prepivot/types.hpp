// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace prepivot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Arm label per unit. Two-arm designs use 0 (control) and 1 (treated);
/// multi-arm designs use 0..A-1.
using Assignment = std::vector<std::uint8_t>;

}  // namespace prepivot
