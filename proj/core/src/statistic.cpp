// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/statistic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "prepivot/error.hpp"

namespace prepivot {
namespace {

// |t| / s with the degenerate scale s = 0 mapped to 0 (t = 0) or infinity.
double scaled_abs(double t, double s) {
  const double a = std::abs(t);
  if (s > 0.0) return a / s;
  return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

}  // namespace

const char* to_string(Family family) noexcept {
  switch (family) {
    case Family::abs: return "abs";
    case Family::quad_form: return "quad_form";
    case Family::max_abs_t: return "max_abs_t";
    case Family::l2_norm: return "l2_norm";
  }
  return "unknown";
}

const char* to_string(XiRecipe recipe) noexcept {
  switch (recipe) {
    case XiRecipe::unit: return "unit";
    case XiRecipe::neyman_ttblock: return "neyman_ttblock";
    case XiRecipe::pooled: return "pooled";
    case XiRecipe::diag_sqrt_neyman: return "diag_sqrt_neyman";
  }
  return "unknown";
}

StatisticSpec::StatisticSpec(Family f, XiRecipe r) : family(f), recipe(r) {
  bool ok = false;
  switch (f) {
    case Family::abs:
    case Family::max_abs_t:
      ok = r == XiRecipe::unit || r == XiRecipe::diag_sqrt_neyman;
      break;
    case Family::quad_form:
      ok = r == XiRecipe::unit || r == XiRecipe::neyman_ttblock || r == XiRecipe::pooled;
      break;
    case Family::l2_norm:
      ok = r == XiRecipe::unit;
      break;
  }
  require(ok, ErrorKind::invalid_argument,
          std::string("unsupported statistic: family ") + to_string(f) + " with recipe " + to_string(r));
}

StatisticSpec StatisticSpec::from_name(const std::string& name) {
  if (name == "dim") return {Family::abs, XiRecipe::unit};
  if (name == "student") return {Family::abs, XiRecipe::diag_sqrt_neyman};
  if (name == "hotelling") return {Family::quad_form, XiRecipe::neyman_ttblock};
  if (name == "hotelling-pooled") return {Family::quad_form, XiRecipe::pooled};
  if (name == "maxt") return {Family::max_abs_t, XiRecipe::diag_sqrt_neyman};
  if (name == "l2") return {Family::l2_norm, XiRecipe::unit};
  fail(ErrorKind::invalid_argument, "unknown statistic '" + name +
                                        "' (expected dim, student, hotelling, hotelling-pooled, maxt, l2)");
}

Xi compute_xi(const StatisticSpec& spec, const CovEstimate& vhat, const Matrix* pooled_cov) {
  Xi xi;
  switch (spec.recipe) {
    case XiRecipe::unit:
      break;
    case XiRecipe::neyman_ttblock:
      xi.matrix = vhat.tt();
      break;
    case XiRecipe::pooled:
      require(pooled_cov != nullptr, ErrorKind::invalid_argument, "pooled recipe needs the pooled covariance");
      xi.matrix = *pooled_cov;
      break;
    case XiRecipe::diag_sqrt_neyman:
      xi.scales = vhat.tt().diagonal().cwiseSqrt();
      break;
  }
  return xi;
}

Xi compute_xi(const StatisticSpec& spec, const ObservedStudy& study, const Assignment& w) {
  const Matrix none(study.n_units(), 0);
  const CovEstimate vhat = neyman_unpooled(study.outcomes(), none, w);
  if (spec.needs_pooled()) {
    const Matrix p = pooled(study, w);
    return compute_xi(spec, vhat, &p);
  }
  return compute_xi(spec, vhat);
}

double evaluate(const StatisticSpec& spec, const Xi& xi, const Vector& t) {
  switch (spec.family) {
    case Family::abs: {
      require(t.size() == 1, ErrorKind::dimension_mismatch, "abs statistic needs a scalar effect");
      if (xi.scales.size() == 0) return std::abs(t[0]);
      require(xi.scales.size() == 1, ErrorKind::dimension_mismatch, "abs statistic needs one scale");
      return scaled_abs(t[0], xi.scales[0]);
    }
    case Family::quad_form: {
      if (xi.matrix.size() == 0) return t.squaredNorm();
      require(xi.matrix.rows() == t.size() && xi.matrix.cols() == t.size(), ErrorKind::dimension_mismatch,
              "quadratic form parameter has the wrong shape");
      Eigen::LLT<Matrix> llt(xi.matrix);
      require(llt.info() == Eigen::Success, ErrorKind::decomposition,
              "quadratic form parameter is not positive definite");
      return llt.matrixL().solve(t).squaredNorm();
    }
    case Family::max_abs_t: {
      require(t.size() >= 1, ErrorKind::dimension_mismatch, "max statistic needs a nonempty effect");
      if (xi.scales.size() == 0) return t.cwiseAbs().maxCoeff();
      require(xi.scales.size() == t.size(), ErrorKind::dimension_mismatch, "max statistic needs one scale per coordinate");
      double best = 0.0;
      for (Index j = 0; j < t.size(); ++j) best = std::max(best, scaled_abs(t[j], xi.scales[j]));
      return best;
    }
    case Family::l2_norm:
      return t.norm();
  }
  return 0.0;
}

}  // namespace prepivot
