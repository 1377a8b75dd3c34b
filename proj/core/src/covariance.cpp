// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/covariance.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "prepivot/error.hpp"

namespace prepivot {
namespace {

Matrix symmetric_gram(const Matrix& centered, double divisor) {
  const Index m = centered.cols();
  Matrix s = Matrix::Zero(m, m);
  s.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / divisor);
  return s.selfadjointView<Eigen::Lower>();
}

}  // namespace

ArmMoments arm_moments(const Matrix& values, const Assignment& w) {
  const Index n = values.rows();
  require(static_cast<Index>(w.size()) == n, ErrorKind::dimension_mismatch,
          "assignment length must equal the number of rows");
  ArmMoments m;
  for (auto z : w) {
    require(z <= 1, ErrorKind::invalid_design, "two-arm assignment must be binary");
    m.n1 += z;
  }
  m.n0 = n - m.n1;
  require(m.n1 >= 2 && m.n0 >= 2, ErrorKind::variance_undefined,
          "each arm needs at least 2 units for a variance estimate");
  Matrix treated(m.n1, values.cols());
  Matrix control(m.n0, values.cols());
  Index i1 = 0, i0 = 0;
  for (Index i = 0; i < n; ++i) {
    if (w[i]) {
      treated.row(i1++) = values.row(i);
    } else {
      control.row(i0++) = values.row(i);
    }
  }
  m.mean1 = treated.colwise().mean().transpose();
  m.mean0 = control.colwise().mean().transpose();
  treated.rowwise() -= m.mean1.transpose();
  control.rowwise() -= m.mean0.transpose();
  m.cov1 = symmetric_gram(treated, static_cast<double>(m.n1 - 1));
  m.cov0 = symmetric_gram(control, static_cast<double>(m.n0 - 1));
  return m;
}

Matrix neyman_from_moments(const ArmMoments& m) {
  const double n = static_cast<double>(m.n1 + m.n0);
  return n * (m.cov1 / static_cast<double>(m.n1) + m.cov0 / static_cast<double>(m.n0));
}

Matrix pooled_from_moments(const ArmMoments& m, Index dim) {
  const double n1 = static_cast<double>(m.n1);
  const double n0 = static_cast<double>(m.n0);
  const double n = n1 + n0;
  require(n >= 3, ErrorKind::variance_undefined, "pooled covariance needs N >= 3");
  const Matrix within = ((n1 - 1.0) * m.cov1.topLeftCorner(dim, dim) +
                         (n0 - 1.0) * m.cov0.topLeftCorner(dim, dim)) /
                        (n - 2.0);
  return (n / n0 + n / n1) * within;
}

CovEstimate neyman_unpooled(const Matrix& values, const Matrix& x, const Assignment& w) {
  require(x.rows() == values.rows(), ErrorKind::dimension_mismatch,
          "covariates must have one row per unit");
  CovEstimate est;
  est.tau_dim = values.cols();
  est.delta_dim = x.cols();
  if (x.cols() == 0) {
    est.v = neyman_from_moments(arm_moments(values, w));
  } else {
    Matrix stacked(values.rows(), values.cols() + x.cols());
    stacked << values, x;
    est.v = neyman_from_moments(arm_moments(stacked, w));
  }
  return est;
}

CovEstimate neyman_unpooled(const ObservedStudy& study, const Assignment& w) {
  return neyman_unpooled(study.outcomes(), study.covariates(), w);
}

Matrix pooled(const Matrix& values, const Assignment& w) {
  return pooled_from_moments(arm_moments(values, w), values.cols());
}

Matrix pooled(const ObservedStudy& study, const Assignment& w) { return pooled(study.outcomes(), w); }

double regression_residual(const ObservedStudy& study, const Assignment& w) {
  const RegressionFit fit = tau_hat_reg(study, w);
  return neyman_from_moments(arm_moments(fit.residuals, w))(0, 0);
}

CovEstimate regression_covariance(const RegressionFit& fit, const Matrix& x, const Assignment& w) {
  return neyman_unpooled(fit.residuals, x, w);
}

Matrix paired_neyman(const Matrix& values, const std::vector<UnitPair>& pairs, const Assignment& w) {
  require(pairs.size() >= 2, ErrorKind::variance_undefined, "paired variance needs at least 2 pairs");
  Matrix diffs = pair_differences(values, pairs, w);
  diffs.rowwise() -= diffs.colwise().mean();
  return symmetric_gram(diffs, static_cast<double>(diffs.rows() - 1));
}

double paired_neyman(const ObservedStudy& study, const Assignment& w) {
  require(study.outcome_dim() == 1, ErrorKind::dimension_mismatch,
          "scalar paired variance needs a single outcome");
  return paired_neyman(study.outcomes(), study.pairs(), w)(0, 0);
}

Matrix multiarm_contrast(const Matrix& values, const Assignment& w, const Matrix& contrasts) {
  validate_contrasts(contrasts);
  const Index n = values.rows();
  const Index d = values.cols();
  const int arms = static_cast<int>(contrasts.rows());
  require(static_cast<Index>(w.size()) == n, ErrorKind::dimension_mismatch,
          "assignment length must equal the number of rows");
  std::vector<Index> counts = arm_counts(w, arms);
  // Scaled arm covariances (N / n_a) S_a; D is their direct sum.
  std::vector<Matrix> blocks(arms);
  for (int a = 0; a < arms; ++a) {
    require(counts[a] >= 2, ErrorKind::variance_undefined,
            "arm " + std::to_string(a) + " needs at least 2 units for a variance estimate");
    Matrix rows(counts[a], d);
    Index r = 0;
    for (Index i = 0; i < n; ++i) {
      if (w[i] == a) rows.row(r++) = values.row(i);
    }
    rows.rowwise() -= rows.colwise().mean();
    blocks[a] = symmetric_gram(rows, static_cast<double>(counts[a] - 1)) *
                (static_cast<double>(n) / static_cast<double>(counts[a]));
  }
  // Block (j, l) of the sandwich equals sum_a C(a, j) C(a, l) D_a.
  const Index dp = contrasts.cols();
  Matrix out = Matrix::Zero(d * dp, d * dp);
  for (Index j = 0; j < dp; ++j) {
    for (Index l = 0; l <= j; ++l) {
      Matrix block = Matrix::Zero(d, d);
      for (int a = 0; a < arms; ++a) block += contrasts(a, j) * contrasts(a, l) * blocks[a];
      out.block(j * d, l * d, d, d) = block;
      if (l != j) out.block(l * d, j * d, d, d) = block.transpose();
    }
  }
  return out;
}

Matrix multiarm_contrast(const ObservedStudy& study, const Assignment& w, const Matrix& contrasts) {
  require(contrasts.rows() == study.arm_count(), ErrorKind::invalid_contrast,
          "contrast matrix needs one row per arm");
  return multiarm_contrast(study.outcomes(), w, contrasts);
}

Repaired repair_pd(const Matrix& v) {
  require(v.rows() == v.cols() && v.rows() >= 1, ErrorKind::dimension_mismatch,
          "covariance must be square and nonempty");
  require(v.allFinite(), ErrorKind::decomposition, "covariance has non-finite entries");
  const Index dim = v.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(v);
  require(eig.info() == Eigen::Success, ErrorKind::decomposition, "eigendecomposition failed");
  const double mean_eigen = v.trace() / static_cast<double>(dim);
  Repaired out;
  out.floor = 1e-10 * (mean_eigen > 0.0 ? mean_eigen : 1.0);
  Vector lambda = eig.eigenvalues();
  if (lambda.minCoeff() < out.floor) {
    lambda = lambda.cwiseMax(out.floor);
    out.repaired = true;
    out.v = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
    out.v = 0.5 * (out.v + out.v.transpose()).eval();
  } else {
    out.v = v;
  }
  out.factor = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();
  return out;
}

}  // namespace prepivot
