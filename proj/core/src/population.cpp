// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/population.hpp"

#include <string>

#include "prepivot/error.hpp"

namespace prepivot {
namespace {

void require_finite(const Matrix& m, const char* what) {
  require(m.allFinite(), ErrorKind::invalid_argument, std::string(what) + " contains non-finite values");
}

}  // namespace

FinitePopulation::FinitePopulation(Matrix y1, Matrix y0, Matrix x)
    : y1_(std::move(y1)), y0_(std::move(y0)), x_(std::move(x)) {
  require(y1_.rows() >= 2, ErrorKind::invalid_argument, "population needs at least 2 units");
  require(y1_.cols() >= 1, ErrorKind::invalid_argument, "population needs at least one outcome");
  require(y0_.rows() == y1_.rows() && y0_.cols() == y1_.cols(), ErrorKind::dimension_mismatch,
          "y1 and y0 must have the same shape");
  if (x_.size() == 0) x_.resize(y1_.rows(), 0);
  require(x_.rows() == y1_.rows(), ErrorKind::dimension_mismatch,
          "covariates must have one row per unit");
  require_finite(y1_, "y1");
  require_finite(y0_, "y0");
  require_finite(x_, "x");
}

Vector FinitePopulation::average_effect() const {
  return (y1_ - y0_).colwise().mean().transpose();
}

ObservedStudy::ObservedStudy(Matrix outcomes, Assignment assignment, Matrix covariates,
                             int arm_count, std::vector<UnitPair> pairs)
    : outcomes_(std::move(outcomes)),
      assignment_(std::move(assignment)),
      covariates_(std::move(covariates)),
      arm_count_(arm_count),
      pairs_(std::move(pairs)) {
  const Index n = outcomes_.rows();
  require(n >= 2, ErrorKind::invalid_argument, "study needs at least 2 units");
  require(outcomes_.cols() >= 1, ErrorKind::invalid_argument, "study needs at least one outcome");
  require(static_cast<Index>(assignment_.size()) == n, ErrorKind::dimension_mismatch,
          "assignment length must equal the number of units");
  if (covariates_.size() == 0) covariates_.resize(n, 0);
  require(covariates_.rows() == n, ErrorKind::dimension_mismatch,
          "covariates must have one row per unit");
  require(arm_count_ >= 2 && arm_count_ <= 255, ErrorKind::invalid_argument,
          "arm count must lie in [2, 255]");
  require_finite(outcomes_, "outcomes");
  require_finite(covariates_, "covariates");
  arm_sizes_ = arm_counts(assignment_, arm_count_);
  for (int a = 0; a < arm_count_; ++a) {
    require(arm_sizes_[a] >= 2, ErrorKind::invalid_design,
            "arm " + std::to_string(a) + " has fewer than 2 units");
  }
  if (!pairs_.empty()) {
    require(arm_count_ == 2, ErrorKind::invalid_design, "pairs require a two-arm study");
    std::vector<std::uint8_t> seen(n, 0);
    for (const auto& [i, j] : pairs_) {
      require(i >= 0 && i < n && j >= 0 && j < n && i != j, ErrorKind::invalid_design,
              "pair references an invalid unit");
      require(!seen[i] && !seen[j], ErrorKind::invalid_design, "unit appears in two pairs");
      seen[i] = seen[j] = 1;
      require(assignment_[i] + assignment_[j] == 1, ErrorKind::invalid_design,
              "each pair needs exactly one treated unit");
    }
    require(static_cast<Index>(2 * pairs_.size()) == n, ErrorKind::invalid_design,
            "every unit must belong to exactly one pair");
  }
}

ObservedStudy ObservedStudy::with_outcomes(Matrix outcomes) const {
  return ObservedStudy(std::move(outcomes), assignment_, covariates_, arm_count_, pairs_);
}

std::vector<Index> arm_counts(const Assignment& w, int arm_count) {
  std::vector<Index> counts(arm_count, 0);
  for (auto label : w) {
    require(label < arm_count, ErrorKind::invalid_design,
            "assignment label " + std::to_string(label) + " outside the declared arms");
    ++counts[label];
  }
  return counts;
}

Vector difference_in_means(const Matrix& values, const Assignment& w) {
  require(static_cast<Index>(w.size()) == values.rows(), ErrorKind::dimension_mismatch,
          "assignment length must equal the number of rows");
  const Index m = values.cols();
  Vector sum1 = Vector::Zero(m);
  Vector sum0 = Vector::Zero(m);
  Index n1 = 0;
  for (Index i = 0; i < values.rows(); ++i) {
    if (w[i] == 1) {
      sum1 += values.row(i).transpose();
      ++n1;
    } else {
      require(w[i] == 0, ErrorKind::invalid_design, "two-arm assignment must be binary");
      sum0 += values.row(i).transpose();
    }
  }
  const Index n0 = values.rows() - n1;
  require(n1 >= 1 && n0 >= 1, ErrorKind::invalid_design, "both arms must be nonempty");
  return sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);
}

Matrix shifted_outcomes(const ObservedStudy& study, const Vector& c) {
  require(c.size() == study.outcome_dim(), ErrorKind::dimension_mismatch,
          "shift must have one entry per outcome");
  require(study.arm_count() == 2, ErrorKind::invalid_design, "shifts need a two-arm study");
  Matrix y = study.outcomes();
  const auto& w = study.assignment();
  for (Index i = 0; i < y.rows(); ++i) {
    if (w[i] == 1) y.row(i) -= c.transpose();
  }
  return y;
}

FinitePopulation impute_sharp_null(const ObservedStudy& study, const Vector& c) {
  Matrix y0 = shifted_outcomes(study, c);
  Matrix y1 = y0.rowwise() + c.transpose();
  // Treated units keep their observed value bit-for-bit.
  const auto& w = study.assignment();
  for (Index i = 0; i < y1.rows(); ++i) {
    if (w[i] == 1) y1.row(i) = study.outcomes().row(i);
  }
  return FinitePopulation(std::move(y1), std::move(y0), study.covariates());
}

ObservedStudy observe(const FinitePopulation& pop, const Assignment& w, std::vector<UnitPair> pairs) {
  require(static_cast<Index>(w.size()) == pop.n_units(), ErrorKind::dimension_mismatch,
          "assignment length must equal the number of units");
  Matrix y(pop.n_units(), pop.outcome_dim());
  for (Index i = 0; i < pop.n_units(); ++i) {
    require(w[i] <= 1, ErrorKind::invalid_design, "two-arm assignment must be binary");
    y.row(i) = w[i] ? pop.y1().row(i) : pop.y0().row(i);
  }
  return ObservedStudy(std::move(y), w, pop.x(), 2, std::move(pairs));
}

Matrix sample_cross_covariance(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.rows() >= 2, ErrorKind::dimension_mismatch,
          "cross covariance needs matching row counts of at least 2");
  const Matrix ac = a.rowwise() - a.colwise().mean();
  const Matrix bc = b.rowwise() - b.colwise().mean();
  return ac.transpose() * bc / static_cast<double>(a.rows() - 1);
}

MomentSet population_moments(const FinitePopulation& pop) {
  MomentSet m;
  const Matrix tau = pop.unit_effects();
  m.mean_y1 = pop.y1().colwise().mean().transpose();
  m.mean_y0 = pop.y0().colwise().mean().transpose();
  m.mean_x = pop.x().colwise().mean().transpose();
  m.sigma_y1 = sample_cross_covariance(pop.y1(), pop.y1());
  m.sigma_y0 = sample_cross_covariance(pop.y0(), pop.y0());
  m.sigma_tau = sample_cross_covariance(tau, tau);
  m.sigma_x = sample_cross_covariance(pop.x(), pop.x());
  m.sigma_y1x = sample_cross_covariance(pop.y1(), pop.x());
  m.sigma_y0x = sample_cross_covariance(pop.y0(), pop.x());
  m.sigma_taux = sample_cross_covariance(tau, pop.x());
  return m;
}

OracleCovariances oracle_covariances(const FinitePopulation& pop, Index n1) {
  const Index n = pop.n_units();
  require(n1 >= 1 && n1 <= n - 1, ErrorKind::invalid_design, "n1 must lie in [1, N-1]");
  const MomentSet m = population_moments(pop);
  const double p = static_cast<double>(n1) / static_cast<double>(n);
  const double q = 1.0 - p;
  const Index d = pop.outcome_dim();
  const Index k = pop.covariate_dim();

  OracleCovariances out;
  out.v_full.resize(d + k, d + k);
  out.v_tilde.resize(d + k, d + k);

  out.v_full.topLeftCorner(d, d) = m.sigma_y1 / p + m.sigma_y0 / q - m.sigma_tau;
  out.v_tilde.topLeftCorner(d, d) = m.sigma_y1 / q + m.sigma_y0 / p;
  if (k > 0) {
    const Matrix vdd = m.sigma_x / (p * q);
    const Matrix vtd = m.sigma_y1x / p + m.sigma_y0x / q;
    const Matrix vtd_tilde = m.sigma_y1x / q + m.sigma_y0x / p;
    out.v_full.topRightCorner(d, k) = vtd;
    out.v_full.bottomLeftCorner(k, d) = vtd.transpose();
    out.v_full.bottomRightCorner(k, k) = vdd;
    out.v_tilde.topRightCorner(d, k) = vtd_tilde;
    out.v_tilde.bottomLeftCorner(k, d) = vtd_tilde.transpose();
    out.v_tilde.bottomRightCorner(k, k) = vdd;
  }
  return out;
}

}  // namespace prepivot
