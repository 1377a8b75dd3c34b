// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/estimator.hpp"

#include <cmath>
#include <string>

#include <Eigen/QR>

#include "prepivot/error.hpp"

namespace prepivot {

const char* to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::dim: return "dim";
    case EstimatorKind::lin_adjusted: return "lin";
    case EstimatorKind::paired: return "paired";
    case EstimatorKind::contrast: return "contrast";
  }
  return "unknown";
}

void validate_contrasts(const Matrix& c, int arm_count) {
  require(c.rows() >= 2 && c.cols() >= 1, ErrorKind::invalid_contrast,
          "contrast matrix needs at least 2 rows (arms) and 1 column");
  require(arm_count == 0 || c.rows() == arm_count, ErrorKind::invalid_contrast,
          "contrast matrix needs one row per arm");
  require(c.allFinite(), ErrorKind::invalid_contrast, "contrast matrix has non-finite entries");
  for (Index j = 0; j < c.cols(); ++j) {
    const double scale = c.col(j).cwiseAbs().maxCoeff();
    require(scale > 0.0, ErrorKind::invalid_contrast,
            "contrast column " + std::to_string(j + 1) + " is identically zero");
    require(std::abs(c.col(j).sum()) <= 1e-12 * scale * static_cast<double>(c.rows()),
            ErrorKind::invalid_contrast, "contrast column " + std::to_string(j + 1) + " does not sum to zero");
  }
}

EstimatorSpec EstimatorSpec::contrast(Matrix contrasts) {
  validate_contrasts(contrasts);
  return {EstimatorKind::contrast, std::move(contrasts)};
}

Vector tau_hat(const ObservedStudy& study, const Assignment& w) {
  return difference_in_means(study.outcomes(), w);
}

Vector delta_hat(const ObservedStudy& study, const Assignment& w) {
  if (study.covariate_dim() == 0) return Vector(0);
  return difference_in_means(study.covariates(), w);
}

RegressionFit fit_lin(const Vector& y, const Matrix& x, const Assignment& w) {
  const Index n = y.size();
  const Index k = x.cols();
  require(x.rows() == n && static_cast<Index>(w.size()) == n, ErrorKind::dimension_mismatch,
          "regression inputs must have one row per unit");
  Index n1 = 0;
  for (auto z : w) {
    require(z <= 1, ErrorKind::invalid_design, "regression adjustment needs a binary assignment");
    n1 += z;
  }
  const Index n0 = n - n1;
  require(n1 >= k + 2 && n0 >= k + 2, ErrorKind::singular_regression,
          "each arm needs at least k + 2 = " + std::to_string(k + 2) + " units for regression adjustment");

  const Vector xbar = x.colwise().mean().transpose();
  const Index p = 2 + 2 * k;
  Matrix design(n, p);
  for (Index i = 0; i < n; ++i) {
    const double wi = w[i];
    design(i, 0) = 1.0;
    design(i, 1) = wi;
    for (Index j = 0; j < k; ++j) {
      const double xc = x(i, j) - xbar[j];
      design(i, 2 + j) = xc;
      design(i, 2 + k + j) = wi * xc;
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  require(qr.rank() == p, ErrorKind::singular_regression,
          "regression design matrix is rank deficient (rank " + std::to_string(qr.rank()) + " of " +
              std::to_string(p) + ")");
  const Vector beta = qr.solve(y);

  RegressionFit fit;
  fit.intercept = beta[0];
  fit.tau = beta[1];
  fit.slope_control = beta.segment(2, k);
  fit.slope_treated = beta.segment(2, k) + beta.segment(2 + k, k);
  fit.residuals = y - design * beta;
  return fit;
}

RegressionFit tau_hat_reg(const ObservedStudy& study, const Assignment& w) {
  require(study.outcome_dim() == 1, ErrorKind::dimension_mismatch,
          "regression adjustment takes a single outcome; use tau_hat_reg_columns");
  return fit_lin(study.outcomes().col(0), study.covariates(), w);
}

std::vector<RegressionFit> tau_hat_reg_columns(const ObservedStudy& study, const Assignment& w) {
  std::vector<RegressionFit> fits;
  for (Index j = 0; j < study.outcome_dim(); ++j) {
    fits.push_back(fit_lin(study.outcomes().col(j), study.covariates(), w));
  }
  return fits;
}

Matrix pair_differences(const Matrix& values, const std::vector<UnitPair>& pairs, const Assignment& w) {
  require(!pairs.empty(), ErrorKind::invalid_design, "no pair structure declared");
  require(static_cast<Index>(w.size()) == values.rows(), ErrorKind::dimension_mismatch,
          "assignment length must equal the number of units");
  Matrix diffs(static_cast<Index>(pairs.size()), values.cols());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [i, j] = pairs[p];
    require(i >= 0 && j >= 0 && i < values.rows() && j < values.rows() && w[i] + w[j] == 1,
            ErrorKind::invalid_design, "each pair needs exactly one treated unit");
    diffs.row(p) = w[i] ? values.row(i) - values.row(j) : values.row(j) - values.row(i);
  }
  return diffs;
}

Vector tau_hat_paired(const ObservedStudy& study, const Assignment& w) {
  return pair_differences(study.outcomes(), study.pairs(), w).colwise().mean().transpose();
}

Matrix arm_means(const Matrix& values, const Assignment& w, int arm_count) {
  require(static_cast<Index>(w.size()) == values.rows(), ErrorKind::dimension_mismatch,
          "assignment length must equal the number of rows");
  Matrix sums = Matrix::Zero(values.cols(), arm_count);
  std::vector<Index> counts(arm_count, 0);
  for (Index i = 0; i < values.rows(); ++i) {
    require(w[i] < arm_count, ErrorKind::invalid_design, "assignment label outside the declared arms");
    sums.col(w[i]) += values.row(i).transpose();
    ++counts[w[i]];
  }
  for (int a = 0; a < arm_count; ++a) {
    require(counts[a] >= 1, ErrorKind::invalid_design, "arm " + std::to_string(a) + " is empty");
    sums.col(a) /= static_cast<double>(counts[a]);
  }
  return sums;
}

Vector contrast_estimate(const Matrix& values, const Assignment& w, const Matrix& contrasts) {
  validate_contrasts(contrasts);
  const Matrix weighted = arm_means(values, w, static_cast<int>(contrasts.rows())) * contrasts;
  return Eigen::Map<const Vector>(weighted.data(), weighted.size());
}

Vector tau_hat_contrast(const ObservedStudy& study, const Assignment& w, const Matrix& contrasts) {
  require(contrasts.rows() == study.arm_count(), ErrorKind::invalid_contrast,
          "contrast matrix needs one row per arm");
  return contrast_estimate(study.outcomes(), w, contrasts);
}

}  // namespace prepivot
