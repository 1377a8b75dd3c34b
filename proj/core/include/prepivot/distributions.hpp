// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace prepivot {

double normal_cdf(double x);

/// P(|Z| > z) for standard normal Z, accurate far into the tail.
double normal_two_sided_upper(double z);

/// Chi-square distribution function and its complement.
double chi_square_cdf(double x, double dof);
double chi_square_upper(double x, double dof);

}  // namespace prepivot
