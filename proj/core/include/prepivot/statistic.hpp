// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "prepivot/covariance.hpp"
#include "prepivot/types.hpp"

namespace prepivot {

enum class Family { abs, quad_form, max_abs_t, l2_norm };
enum class XiRecipe { unit, neyman_ttblock, pooled, diag_sqrt_neyman };

const char* to_string(Family family) noexcept;
const char* to_string(XiRecipe recipe) noexcept;

/// A statistic family together with the rule producing its data-driven
/// parameter. Supported pairs:
///   abs:       unit, diag_sqrt_neyman      |t| / eta      (d = 1)
///   quad_form: unit, neyman_ttblock, pooled  t' eta^{-1} t
///   max_abs_t: unit, diag_sqrt_neyman      max_j |t_j| / eta_j
///   l2_norm:   unit                        ||t||_2
struct StatisticSpec {
  Family family = Family::abs;
  XiRecipe recipe = XiRecipe::unit;

  StatisticSpec() = default;
  StatisticSpec(Family f, XiRecipe r);

  /// CLI names: dim, student, hotelling, hotelling-pooled, maxt, l2.
  static StatisticSpec from_name(const std::string& name);
  bool needs_pooled() const noexcept { return recipe == XiRecipe::pooled; }
};

/// Evaluated parameter: a matrix for quadratic forms, a vector of scales for
/// abs / max_abs_t, nothing for the unit recipe.
struct Xi {
  Matrix matrix;
  Vector scales;
};

/// unit -> empty; neyman_ttblock -> Vhat_tt; pooled -> the pooled
/// covariance (must be supplied); diag_sqrt_neyman -> sqrt(diag(Vhat_tt)).
Xi compute_xi(const StatisticSpec& spec, const CovEstimate& vhat, const Matrix* pooled_cov = nullptr);

/// Convenience path that derives the unpooled / pooled estimates from the
/// study at assignment w.
Xi compute_xi(const StatisticSpec& spec, const ObservedStudy& study, const Assignment& w);

/// f_eta(t); quadratic forms use a Cholesky solve and raise a decomposition
/// error when eta is not positive definite.
double evaluate(const StatisticSpec& spec, const Xi& xi, const Vector& t);

}  // namespace prepivot
