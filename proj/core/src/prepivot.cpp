// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/prepivot.hpp"

#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "prepivot/distributions.hpp"
#include "prepivot/error.hpp"

namespace prepivot {

const char* to_string(GaussMethod method) noexcept {
  switch (method) {
    case GaussMethod::automatic: return "auto";
    case GaussMethod::closed_form: return "closed";
    case GaussMethod::monte_carlo: return "mc";
  }
  return "unknown";
}

const char* to_string(GaussRoute route) noexcept {
  switch (route) {
    case GaussRoute::closed_normal: return "closed_normal";
    case GaussRoute::closed_chi_square: return "closed_chi_square";
    case GaussRoute::monte_carlo: return "monte_carlo";
    case GaussRoute::monte_carlo_truncated: return "monte_carlo_truncated";
  }
  return "unknown";
}

bool closed_form_available(const StatisticSpec& spec, const BalanceCriterion& criterion, Index tau_dim) {
  if (!criterion.is_none()) return false;
  if (tau_dim == 1) return true;
  return spec.family == Family::quad_form && spec.recipe == XiRecipe::neyman_ttblock;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Scalar case: every family is an increasing function h of |a|, so the
// sublevel set {f <= T} is {|a| <= h^{-1}(T)}.
double scalar_radius(const StatisticSpec& spec, const Xi& xi, double t_obs) {
  switch (spec.family) {
    case Family::abs:
    case Family::max_abs_t:
      if (xi.scales.size() == 0) return t_obs;
      if (t_obs == kInf) return kInf;
      return t_obs * xi.scales[0];
    case Family::quad_form: {
      const double eta = xi.matrix.size() == 0 ? 1.0 : xi.matrix(0, 0);
      return std::sqrt(t_obs * eta);
    }
    case Family::l2_norm:
      return t_obs;
  }
  return t_obs;
}

PrepivotValue closed_normal(const CovEstimate& vhat, const StatisticSpec& spec, const Xi& xi, double t_obs) {
  PrepivotValue out;
  out.route = GaussRoute::closed_normal;
  const double v = vhat.v(0, 0);
  const double radius = scalar_radius(spec, xi, t_obs);
  if (v <= 0.0) {
    out.key = radius > 0.0 ? kInf : 0.0;
  } else {
    out.key = radius == kInf ? kInf : radius / std::sqrt(v);
  }
  out.upper = normal_two_sided_upper(out.key);
  out.g = 1.0 - out.upper;
  return out;
}

PrepivotValue closed_chi_square(const CovEstimate& vhat, double t_obs) {
  PrepivotValue out;
  out.route = GaussRoute::closed_chi_square;
  const double dof = static_cast<double>(vhat.tau_dim);
  out.key = t_obs;
  out.g = chi_square_cdf(t_obs, dof);
  out.upper = chi_square_upper(t_obs, dof);
  return out;
}

// A draw y of standard normals is mapped to the statistic's comparison
// quantity through one of three reductions.
enum class Compare { max_abs, squared_norm, spectral };

struct FamilyMap {
  Compare compare = Compare::max_abs;
  Matrix p;        // rows: transformed effect coordinates
  Vector lambda;   // spectral weights
  double threshold = 0.0;
  bool impossible = false;  // f(A) = inf almost surely while T is finite
};

// Maps the factor of the effect block (A = la * y) to the family test.
FamilyMap family_map(const StatisticSpec& spec, const Xi& xi, const Matrix& la, double t_obs, bool spectral_ok) {
  FamilyMap fm;
  const Index m = la.rows();
  switch (spec.family) {
    case Family::abs:
    case Family::max_abs_t: {
      fm.compare = Compare::max_abs;
      fm.threshold = t_obs;
      fm.p = la;
      if (xi.scales.size() != 0) {
        for (Index j = 0; j < m; ++j) {
          if (xi.scales[j] > 0.0) {
            fm.p.row(j) /= xi.scales[j];
          } else if (t_obs != kInf) {
            fm.impossible = true;
          }
        }
      }
      break;
    }
    case Family::quad_form: {
      fm.threshold = t_obs;
      if (xi.matrix.size() == 0) {
        fm.p = la;
      } else {
        Eigen::LLT<Matrix> llt(xi.matrix);
        require(llt.info() == Eigen::Success, ErrorKind::decomposition,
                "quadratic form parameter is not positive definite");
        fm.p = llt.matrixL().solve(la);
      }
      fm.compare = Compare::squared_norm;
      break;
    }
    case Family::l2_norm:
      fm.compare = Compare::squared_norm;
      fm.threshold = t_obs == kInf ? kInf : t_obs * t_obs;
      fm.p = la;
      break;
  }
  if (spectral_ok && fm.compare == Compare::squared_norm) {
    // ||P y||^2 has the law of sum_i lambda_i z_i^2 with lambda = eig(P'P).
    const Matrix gram = fm.p.transpose() * fm.p;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    require(eig.info() == Eigen::Success, ErrorKind::decomposition, "eigendecomposition failed");
    fm.lambda = eig.eigenvalues().cwiseMax(0.0);
    fm.compare = Compare::spectral;
  }
  return fm;
}

bool family_accepts(const FamilyMap& fm, const Vector& y, Vector& work) {
  switch (fm.compare) {
    case Compare::max_abs:
      work.noalias() = fm.p * y;
      return work.cwiseAbs().maxCoeff() <= fm.threshold;
    case Compare::squared_norm:
      work.noalias() = fm.p * y;
      return work.squaredNorm() <= fm.threshold;
    case Compare::spectral:
      return fm.lambda.dot(y.cwiseAbs2()) <= fm.threshold;
  }
  return false;
}

void finish_mc(PrepivotValue& out, std::size_t num, std::size_t den) {
  out.g = static_cast<double>(num) / static_cast<double>(den);
  out.upper = static_cast<double>(den - num) / static_cast<double>(den);
  out.key = out.g;
  out.mc_std_error = std::sqrt(out.g * (1.0 - out.g) / static_cast<double>(den));
}

PrepivotValue monte_carlo(const CovEstimate& vhat, const StatisticSpec& spec, const Xi& xi,
                          const BalanceCriterion& criterion, double t_obs, const GaussEngineConfig& cfg,
                          std::uint64_t stream) {
  PrepivotValue out;
  out.route = GaussRoute::monte_carlo;
  const Index m = vhat.tau_dim;
  const bool conditioned = !criterion.is_none();
  const Index k = conditioned ? criterion.dim() : 0;
  require(!conditioned || vhat.delta_dim == k, ErrorKind::dimension_mismatch,
          "covariance estimate lacks the imbalance block required by the balance criterion");

  const Matrix joint = conditioned ? Matrix(vhat.v) : Matrix(vhat.tt());
  const Repaired rep = repair_pd(joint);
  out.repaired = rep.repaired;
  const Matrix la = rep.factor.topRows(m);
  const FamilyMap fm = family_map(spec, xi, la, t_obs, !conditioned);
  if (fm.impossible) {
    out.g = 0.0;
    out.upper = 1.0;
    out.key = 0.0;
    return out;
  }

  CounterRng rng(cfg.seed, stream);
  boost::random::normal_distribution<double> normal;
  const Index dim = m + k;
  Vector y(dim);
  Vector work(fm.p.rows());
  std::size_t num = 0, den = 0;

  if (!conditioned) {
    for (std::size_t i = 0; i < cfg.draws; ++i) {
      for (Index j = 0; j < dim; ++j) y[j] = normal(rng);
      num += family_accepts(fm, y, work) ? 1 : 0;
    }
    out.denominator_estimate = 1.0;
    finish_mc(out, num, cfg.draws);
    return out;
  }

  const Matrix lb = rep.factor.bottomRows(k);
  const bool mahalanobis = criterion.kind() == BalanceKind::mahalanobis;
  Matrix q = lb;
  if (mahalanobis) q = criterion.metric_factor().triangularView<Eigen::Lower>().solve(lb);
  Vector b(k);
  for (std::size_t i = 0; i < cfg.draws; ++i) {
    for (Index j = 0; j < dim; ++j) y[j] = normal(rng);
    b.noalias() = q * y;
    const bool balanced = mahalanobis ? b.squaredNorm() <= criterion.threshold() : criterion.accepts(b);
    if (!balanced) continue;
    ++den;
    num += family_accepts(fm, y, work) ? 1 : 0;
  }
  if (den == 0) {
    fail(ErrorKind::balance_mass, "no Gaussian draw satisfied the balance criterion in " +
                                      std::to_string(cfg.draws) + " draws; increase the Gaussian draw count");
  }
  out.denominator_estimate = static_cast<double>(den) / static_cast<double>(cfg.draws);
  finish_mc(out, num, den);
  return out;
}

// Metric equal to the imbalance block: B = L_M u with u standard normal
// truncated to the ball ||u||^2 <= a, and A | u ~ N(C u, S).
PrepivotValue monte_carlo_truncated(const CovEstimate& vhat, const StatisticSpec& spec, const Xi& xi,
                                    const BalanceCriterion& criterion, double t_obs,
                                    const GaussEngineConfig& cfg, std::uint64_t stream) {
  PrepivotValue out;
  out.route = GaussRoute::monte_carlo_truncated;
  const Index m = vhat.tau_dim;
  const Index k = criterion.dim();
  const auto lm = criterion.metric_factor().triangularView<Eigen::Lower>();
  const Matrix ct = lm.solve(Matrix(vhat.td().transpose()));  // k x m
  const Matrix schur = Matrix(vhat.tt()) - ct.transpose() * ct;
  const Repaired rep = repair_pd(schur);
  out.repaired = rep.repaired;
  Matrix la(m, k + m);
  la << ct.transpose(), rep.factor;
  const FamilyMap fm = family_map(spec, xi, la, t_obs, false);
  const double half_k = 0.5 * static_cast<double>(k);
  const double mass = chi_square_cdf(criterion.threshold(), static_cast<double>(k));
  out.denominator_estimate = mass;
  if (fm.impossible) {
    out.g = 0.0;
    out.upper = 1.0;
    out.key = 0.0;
    return out;
  }

  CounterRng rng(cfg.seed, stream);
  boost::random::normal_distribution<double> normal;
  Vector y(k + m);
  Vector work(fm.p.rows());
  std::size_t num = 0;
  for (std::size_t i = 0; i < cfg.draws; ++i) {
    for (Index j = 0; j < k + m; ++j) y[j] = normal(rng);
    const double norm = y.head(k).norm();
    const double prob = rng.uniform() * mass;
    const double radius2 = prob > 0.0 ? 2.0 * boost::math::gamma_p_inv(half_k, prob) : 0.0;
    if (norm > 0.0) y.head(k) *= std::sqrt(radius2) / norm;
    num += family_accepts(fm, y, work) ? 1 : 0;
  }
  finish_mc(out, num, cfg.draws);
  return out;
}

}  // namespace

PrepivotValue pushforward_cdf(const CovEstimate& vhat, const StatisticSpec& spec, const Xi& xi,
                              const BalanceCriterion& criterion, double t_obs, const GaussEngineConfig& cfg,
                              std::uint64_t stream) {
  require(vhat.tau_dim >= 1 && vhat.v.rows() == vhat.tau_dim + vhat.delta_dim &&
              vhat.v.cols() == vhat.v.rows(),
          ErrorKind::dimension_mismatch, "malformed covariance estimate");
  require(t_obs >= 0.0, ErrorKind::invalid_argument, "statistic value must be nonnegative");
  const bool closed = closed_form_available(spec, criterion, vhat.tau_dim);
  if (cfg.method == GaussMethod::closed_form) {
    require(closed, ErrorKind::invalid_argument,
            "no closed form exists for this statistic and balance criterion; use auto or mc");
  }
  if (closed && cfg.method != GaussMethod::monte_carlo) {
    if (vhat.tau_dim == 1) return closed_normal(vhat, spec, xi, t_obs);
    return closed_chi_square(vhat, t_obs);
  }
  require(cfg.draws >= 100, ErrorKind::invalid_argument, "Monte Carlo needs at least 100 Gaussian draws");
  if (criterion.kind() == BalanceKind::mahalanobis && vhat.delta_dim == criterion.dim() &&
      Matrix(vhat.dd()) == criterion.metric()) {
    return monte_carlo_truncated(vhat, spec, xi, criterion, t_obs, cfg, stream);
  }
  return monte_carlo(vhat, spec, xi, criterion, t_obs, cfg, stream);
}

AssignmentEvaluator::AssignmentEvaluator(const Matrix& outcomes, const Matrix& covariates,
                                         std::vector<UnitPair> pairs, int arm_count, EstimatorSpec estimator,
                                         bool with_delta, bool with_pooled)
    : outcomes_(outcomes),
      covariates_(covariates),
      no_covariates_(outcomes.rows(), 0),
      pairs_(std::move(pairs)),
      arm_count_(arm_count),
      estimator_(std::move(estimator)),
      with_delta_(with_delta),
      with_pooled_(with_pooled) {
  const Index d = outcomes_.cols();
  switch (estimator_.kind) {
    case EstimatorKind::dim:
    case EstimatorKind::lin_adjusted:
      require(arm_count_ == 2, ErrorKind::invalid_design, "this estimator needs a two-arm design");
      effect_dim_ = d;
      break;
    case EstimatorKind::paired:
      require(!pairs_.empty(), ErrorKind::invalid_design, "paired estimator needs a pair structure");
      require(!with_delta_, ErrorKind::invalid_design, "paired designs carry no balance criterion");
      effect_dim_ = d;
      break;
    case EstimatorKind::contrast:
      validate_contrasts(estimator_.contrasts, arm_count_);
      require(!with_delta_, ErrorKind::invalid_design, "multi-arm designs carry no balance criterion");
      effect_dim_ = d * estimator_.contrasts.cols();
      break;
  }
  require(!with_pooled_ || estimator_.kind == EstimatorKind::dim || estimator_.kind == EstimatorKind::lin_adjusted,
          ErrorKind::invalid_argument, "the pooled recipe needs a two-arm estimator");
}

AssignmentEstimate AssignmentEvaluator::estimate(const Assignment& w) const {
  AssignmentEstimate est;
  const Matrix& x = with_delta_ ? covariates_ : no_covariates_;
  const double n = static_cast<double>(outcomes_.rows());
  switch (estimator_.kind) {
    case EstimatorKind::dim: {
      est.scale = std::sqrt(n);
      Matrix stacked(outcomes_.rows(), outcomes_.cols() + x.cols());
      stacked << outcomes_, x;
      const ArmMoments mom = arm_moments(stacked, w);
      est.theta = (mom.mean1 - mom.mean0).head(outcomes_.cols());
      est.vhat.v = neyman_from_moments(mom);
      est.vhat.tau_dim = outcomes_.cols();
      est.vhat.delta_dim = x.cols();
      if (with_pooled_) est.pooled = pooled_from_moments(mom, outcomes_.cols());
      break;
    }
    case EstimatorKind::lin_adjusted: {
      est.scale = std::sqrt(n);
      const Index d = outcomes_.cols();
      Matrix residuals(outcomes_.rows(), d);
      est.theta.resize(d);
      for (Index j = 0; j < d; ++j) {
        const RegressionFit fit = fit_lin(outcomes_.col(j), covariates_, w);
        est.theta[j] = fit.tau;
        residuals.col(j) = fit.residuals;
      }
      Matrix stacked(outcomes_.rows(), d + x.cols());
      stacked << residuals, x;
      const ArmMoments mom = arm_moments(stacked, w);
      est.vhat.v = neyman_from_moments(mom);
      est.vhat.tau_dim = d;
      est.vhat.delta_dim = x.cols();
      if (with_pooled_) est.pooled = pooled_from_moments(mom, d);
      break;
    }
    case EstimatorKind::paired: {
      est.scale = std::sqrt(static_cast<double>(pairs_.size()));
      est.theta = pair_differences(outcomes_, pairs_, w).colwise().mean().transpose();
      est.vhat.v = paired_neyman(outcomes_, pairs_, w);
      est.vhat.tau_dim = outcomes_.cols();
      break;
    }
    case EstimatorKind::contrast: {
      est.scale = std::sqrt(n);
      est.theta = contrast_estimate(outcomes_, w, estimator_.contrasts);
      est.vhat.v = multiarm_contrast(outcomes_, w, estimator_.contrasts);
      est.vhat.tau_dim = est.theta.size();
      break;
    }
  }
  est.t = est.theta * est.scale;
  return est;
}

AnalysisValue evaluate_analysis(const AssignmentEstimate& est, const StatisticSpec& spec, bool prepivot,
                                const BalanceCriterion& criterion, const GaussEngineConfig& cfg,
                                std::uint64_t stream) {
  AnalysisValue out;
  out.xi = compute_xi(spec, est.vhat, est.pooled.size() ? &est.pooled : nullptr);
  out.statistic = evaluate(spec, out.xi, est.t);
  out.prepivoted = prepivot;
  if (prepivot) {
    out.prepivot = pushforward_cdf(est.vhat, spec, out.xi, criterion, out.statistic, cfg, stream);
    out.key = out.prepivot.key;
  } else {
    out.key = out.statistic;
  }
  return out;
}

PrepivotValue prepivot_assignment(const ObservedStudy& study, const Assignment& w, const StatisticSpec& spec,
                                  const EstimatorSpec& estimator, const BalanceCriterion& criterion,
                                  const GaussEngineConfig& cfg, std::uint64_t stream_index) {
  const AssignmentEvaluator evaluator(study.outcomes(), study.covariates(), study.pairs(), study.arm_count(),
                                      estimator, !criterion.is_none(), spec.needs_pooled());
  const AssignmentEstimate est = evaluator.estimate(w);
  return evaluate_analysis(est, spec, true, criterion, cfg, gaussian_stream(stream_index, 0)).prepivot;
}

}  // namespace prepivot
