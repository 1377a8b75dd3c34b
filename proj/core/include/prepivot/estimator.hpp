// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "prepivot/population.hpp"
#include "prepivot/types.hpp"

namespace prepivot {

enum class EstimatorKind { dim, lin_adjusted, paired, contrast };

const char* to_string(EstimatorKind kind) noexcept;

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::dim;
  /// A x d' matrix of column-wise contrasts (contrast kind only).
  Matrix contrasts;

  static EstimatorSpec dim() { return {}; }
  static EstimatorSpec lin_adjusted() { return {EstimatorKind::lin_adjusted, {}}; }
  static EstimatorSpec paired() { return {EstimatorKind::paired, {}}; }
  /// Validates that every column sums to zero and has a nonzero entry.
  static EstimatorSpec contrast(Matrix contrasts);
};

/// Throws invalid_contrast unless each column of `c` sums to zero (up to
/// 1e-12 times its largest entry) and is not identically zero.
void validate_contrasts(const Matrix& c, int arm_count = 0);

Vector tau_hat(const ObservedStudy& study, const Assignment& w);
Vector delta_hat(const ObservedStudy& study, const Assignment& w);

/// Interacted least-squares fit of y on [1, W, x - xbar, W (x - xbar)].
struct RegressionFit {
  double tau = 0.0;
  double intercept = 0.0;
  Vector slope_treated;   // Q1: slope on the centered covariates in the treated arm
  Vector slope_control;   // Q0
  Vector residuals;       // y_i - fitted_i, one per unit
};

/// Core solver on raw columns. Requires each arm to hold at least k + 2
/// units and a full-rank design (singular_regression otherwise).
RegressionFit fit_lin(const Vector& y, const Matrix& x, const Assignment& w);

/// Lin-adjusted effect for a study with a single outcome column.
RegressionFit tau_hat_reg(const ObservedStudy& study, const Assignment& w);

/// Outcome-by-outcome version of tau_hat_reg for d >= 1.
std::vector<RegressionFit> tau_hat_reg_columns(const ObservedStudy& study, const Assignment& w);

/// Signed within-pair differences (treated minus control), one row per pair.
Matrix pair_differences(const Matrix& values, const std::vector<UnitPair>& pairs, const Assignment& w);

Vector tau_hat_paired(const ObservedStudy& study, const Assignment& w);

/// d x A matrix of arm means.
Matrix arm_means(const Matrix& values, const Assignment& w, int arm_count);

/// vec(Ybar C) with column-major vectorization, length d * d'.
Vector contrast_estimate(const Matrix& values, const Assignment& w, const Matrix& contrasts);
Vector tau_hat_contrast(const ObservedStudy& study, const Assignment& w, const Matrix& contrasts);

}  // namespace prepivot
