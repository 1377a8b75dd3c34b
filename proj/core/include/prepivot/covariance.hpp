// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "prepivot/estimator.hpp"
#include "prepivot/population.hpp"
#include "prepivot/types.hpp"

namespace prepivot {

/// Covariance estimate for the scaled (effect, imbalance) vector. The first
/// tau_dim coordinates belong to the effect estimator and the trailing
/// delta_dim to the covariate imbalance.
struct CovEstimate {
  Matrix v;
  Index tau_dim = 0;
  Index delta_dim = 0;

  auto tt() const { return v.topLeftCorner(tau_dim, tau_dim); }
  auto td() const { return v.topRightCorner(tau_dim, delta_dim); }
  auto dd() const { return v.bottomRightCorner(delta_dim, delta_dim); }
};

/// Within-arm means and sample covariances (divisor n_z - 1) of the columns
/// of `values`, centered in two passes.
struct ArmMoments {
  Index n1 = 0;
  Index n0 = 0;
  Vector mean1, mean0;
  Matrix cov1, cov0;
};

ArmMoments arm_moments(const Matrix& values, const Assignment& w);

/// N (S1 / n1 + S0 / n0) from precomputed arm moments.
Matrix neyman_from_moments(const ArmMoments& m);
/// (N/n0 + N/n1) ((n1 - 1) S1 + (n0 - 1) S0) / (N - 2), restricted to the
/// leading `dim` columns.
Matrix pooled_from_moments(const ArmMoments& m, Index dim);

/// Unpooled estimate for (sqrt(N) tau_hat(values), sqrt(N) delta_hat(x)).
/// Pass an N x 0 matrix for x to get only the effect block.
CovEstimate neyman_unpooled(const Matrix& values, const Matrix& x, const Assignment& w);
CovEstimate neyman_unpooled(const ObservedStudy& study, const Assignment& w);

Matrix pooled(const Matrix& values, const Assignment& w);
Matrix pooled(const ObservedStudy& study, const Assignment& w);

/// N/n1 s1^2 + N/n0 s0^2 of the interacted-OLS residuals.
double regression_residual(const ObservedStudy& study, const Assignment& w);

/// Unpooled estimate applied to [residuals | x]: the residual variance in
/// the effect block and the residual/covariate cross covariance (zero up to
/// rounding, as least-squares residuals are orthogonal to x within arms).
CovEstimate regression_covariance(const RegressionFit& fit, const Matrix& x, const Assignment& w);

/// Sample covariance (divisor I - 1) of the pair differences.
Matrix paired_neyman(const Matrix& values, const std::vector<UnitPair>& pairs, const Assignment& w);
double paired_neyman(const ObservedStudy& study, const Assignment& w);

/// (C' kron I_d) D (C' kron I_d)' with D the direct sum of (N / n_a) S_a.
Matrix multiarm_contrast(const Matrix& values, const Assignment& w, const Matrix& contrasts);
Matrix multiarm_contrast(const ObservedStudy& study, const Assignment& w, const Matrix& contrasts);

struct Repaired {
  Matrix v;
  /// Symmetric factor with v = factor * factor'.
  Matrix factor;
  bool repaired = false;
  double floor = 0.0;
};

/// Eigendecomposition of a symmetric matrix with eigenvalues clamped at
/// 1e-10 * trace / dim. A matrix whose eigenvalues already clear the floor is
/// returned unchanged.
Repaired repair_pd(const Matrix& v);

}  // namespace prepivot
