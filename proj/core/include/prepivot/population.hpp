// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "prepivot/types.hpp"

namespace prepivot {

/// Full science table: both potential outcome matrices plus covariates.
/// Only simulators and oracles ever hold one.
class FinitePopulation {
 public:
  FinitePopulation(Matrix y1, Matrix y0, Matrix x);

  Index n_units() const noexcept { return y1_.rows(); }
  Index outcome_dim() const noexcept { return y1_.cols(); }
  Index covariate_dim() const noexcept { return x_.cols(); }

  const Matrix& y1() const noexcept { return y1_; }
  const Matrix& y0() const noexcept { return y0_; }
  const Matrix& x() const noexcept { return x_; }

  /// Row-wise unit effects y1 - y0.
  Matrix unit_effects() const { return y1_ - y0_; }
  Vector average_effect() const;

 private:
  Matrix y1_;
  Matrix y0_;
  Matrix x_;
};

using UnitPair = std::array<Index, 2>;

/// What an analyst holds after the experiment: observed outcomes, the
/// realized assignment and the covariates. Paired studies also carry the
/// pair structure.
class ObservedStudy {
 public:
  ObservedStudy(Matrix outcomes, Assignment assignment, Matrix covariates, int arm_count = 2,
                std::vector<UnitPair> pairs = {});

  Index n_units() const noexcept { return outcomes_.rows(); }
  Index outcome_dim() const noexcept { return outcomes_.cols(); }
  Index covariate_dim() const noexcept { return covariates_.cols(); }
  int arm_count() const noexcept { return arm_count_; }

  const Matrix& outcomes() const noexcept { return outcomes_; }
  const Assignment& assignment() const noexcept { return assignment_; }
  const Matrix& covariates() const noexcept { return covariates_; }
  const std::vector<Index>& arm_sizes() const noexcept { return arm_sizes_; }
  const std::vector<UnitPair>& pairs() const noexcept { return pairs_; }
  bool is_paired() const noexcept { return !pairs_.empty(); }

  /// Same study with the outcome matrix replaced.
  ObservedStudy with_outcomes(Matrix outcomes) const;

 private:
  Matrix outcomes_;
  Assignment assignment_;
  Matrix covariates_;
  int arm_count_;
  std::vector<Index> arm_sizes_;
  std::vector<UnitPair> pairs_;
};

struct MomentSet {
  Vector mean_y1, mean_y0, mean_x;
  Matrix sigma_y1, sigma_y0, sigma_tau, sigma_x;
  Matrix sigma_y1x, sigma_y0x, sigma_taux;
};

/// Finite-N analogues of the limiting covariances of the two-arm
/// (treatment-effect, covariate-imbalance) vector: v_full under the true
/// randomization distribution, v_tilde under the sharp-null reference.
struct OracleCovariances {
  Matrix v_full;
  Matrix v_tilde;
};

/// Per-arm counts of an assignment over `arm_count` arms.
std::vector<Index> arm_counts(const Assignment& w, int arm_count);

/// Treated mean minus control mean for every column of `values`.
Vector difference_in_means(const Matrix& values, const Assignment& w);

/// Science table implied by the constant-effect hypothesis tau_i = c.
FinitePopulation impute_sharp_null(const ObservedStudy& study, const Vector& c);

/// Outcomes y_i(Z_i) - Z_i c, the data that a test of tau_i = c re-randomizes.
Matrix shifted_outcomes(const ObservedStudy& study, const Vector& c);

/// Reveal the outcomes of `pop` under a two-arm assignment.
ObservedStudy observe(const FinitePopulation& pop, const Assignment& w,
                      std::vector<UnitPair> pairs = {});

/// Sample covariance with divisor rows-1 of the columns of `centered`
/// after removing column means. Cross-covariance of two column sets.
Matrix sample_cross_covariance(const Matrix& a, const Matrix& b);

MomentSet population_moments(const FinitePopulation& pop);

OracleCovariances oracle_covariances(const FinitePopulation& pop, Index n1);

}  // namespace prepivot
