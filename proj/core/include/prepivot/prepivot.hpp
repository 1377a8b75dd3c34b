// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "prepivot/covariance.hpp"
#include "prepivot/design.hpp"
#include "prepivot/estimator.hpp"
#include "prepivot/rng.hpp"
#include "prepivot/statistic.hpp"

namespace prepivot {

enum class GaussMethod { automatic, closed_form, monte_carlo };

/// closed_normal: two-sided normal tail for scalar effects with no balance
/// criterion. closed_chi_square: quadratic form whose parameter is the
/// effect block of Vhat, no criterion. monte_carlo: ratio estimator over
/// joint draws. monte_carlo_truncated: the criterion metric equals Vhat's
/// imbalance block, so the denominator is the chi-square mass below a and
/// every draw is taken inside the acceptance region.
enum class GaussRoute { closed_normal, closed_chi_square, monte_carlo, monte_carlo_truncated };

const char* to_string(GaussMethod method) noexcept;
const char* to_string(GaussRoute route) noexcept;

struct GaussEngineConfig {
  std::size_t draws = 10'000;
  std::uint64_t seed = 0;
  GaussMethod method = GaussMethod::automatic;
};

struct PrepivotValue {
  double g = 0.0;
  /// 1 - g, computed without cancellation on closed-form routes.
  double upper = 1.0;
  /// Ordering key used by randomization tests. Closed-form routes report
  /// the argument of their strictly increasing distribution function (so
  /// tail probabilities never tie spuriously); Monte Carlo routes report g.
  double key = 0.0;
  GaussRoute route = GaussRoute::closed_normal;
  double mc_std_error = 0.0;
  double denominator_estimate = 1.0;
  bool repaired = false;
};

/// Whether a closed form exists for this statistic and criterion. The
/// answer depends only on the specification, never on data values.
bool closed_form_available(const StatisticSpec& spec, const BalanceCriterion& criterion, Index tau_dim);

/// Conditional Gaussian distribution function of f_xi evaluated at t_obs:
/// P(f_xi(A) <= t_obs | phi(B) = 1) for (A, B) ~ N(0, vhat). Monte Carlo
/// routes consume the counter-based substream `stream` of cfg.seed.
PrepivotValue pushforward_cdf(const CovEstimate& vhat, const StatisticSpec& spec, const Xi& xi,
                              const BalanceCriterion& criterion, double t_obs,
                              const GaussEngineConfig& cfg, std::uint64_t stream = gaussian_stream(0, 0));

/// Everything the statistic layer needs from one assignment.
struct AssignmentEstimate {
  Vector theta;      // unscaled effect estimate
  Vector t;          // scale * theta
  double scale = 1;  // sqrt(N), or sqrt(I) for paired designs
  CovEstimate vhat;  // covariance of the scaled (effect, imbalance) vector
  Matrix pooled;     // pooled covariance when requested
};

/// Recomputes estimator and covariance for fixed outcomes under varying
/// assignments.
class AssignmentEvaluator {
 public:
  AssignmentEvaluator(const Matrix& outcomes, const Matrix& covariates, std::vector<UnitPair> pairs,
                      int arm_count, EstimatorSpec estimator, bool with_delta, bool with_pooled);

  AssignmentEstimate estimate(const Assignment& w) const;
  Index effect_dim() const noexcept { return effect_dim_; }
  const EstimatorSpec& estimator() const noexcept { return estimator_; }

 private:
  const Matrix& outcomes_;
  const Matrix& covariates_;
  Matrix no_covariates_;
  std::vector<UnitPair> pairs_;
  int arm_count_;
  EstimatorSpec estimator_;
  bool with_delta_;
  bool with_pooled_;
  Index effect_dim_ = 0;
};

struct AnalysisValue {
  double statistic = 0.0;
  Xi xi;
  PrepivotValue prepivot;
  bool prepivoted = false;
  /// Ordering key for the randomization test: the raw statistic, or the
  /// prepivot key.
  double key = 0.0;
};

AnalysisValue evaluate_analysis(const AssignmentEstimate& est, const StatisticSpec& spec, bool prepivot,
                                const BalanceCriterion& criterion, const GaussEngineConfig& cfg,
                                std::uint64_t stream);

/// g_w for the (imputed) outcomes held by `study` under assignment w, with
/// the Gaussian substream of slot `stream_index`.
PrepivotValue prepivot_assignment(const ObservedStudy& study, const Assignment& w, const StatisticSpec& spec,
                                  const EstimatorSpec& estimator, const BalanceCriterion& criterion,
                                  const GaussEngineConfig& cfg, std::uint64_t stream_index);

}  // namespace prepivot
