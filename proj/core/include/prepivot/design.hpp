// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "prepivot/population.hpp"
#include "prepivot/rng.hpp"
#include "prepivot/types.hpp"

namespace prepivot {

enum class BalanceKind { none, mahalanobis, custom };

/// Acceptance rule phi applied to the scaled imbalance sqrt(N) * delta_hat.
class BalanceCriterion {
 public:
  using Indicator = std::function<bool(const Vector&)>;

  BalanceCriterion();

  static BalanceCriterion none();
  /// Accepts b when b' metric^{-1} b <= a. The metric must be positive
  /// definite (decomposition error otherwise); boundary points are accepted.
  static BalanceCriterion mahalanobis(double a, const Matrix& metric);
  /// User-supplied indicator over vectors of length `dim`. Construction
  /// spot-checks phi(0) = 1, mirror symmetry and convexity on random points
  /// drawn at `probe_scale` and throws invalid_argument on a violation.
  static BalanceCriterion custom(Indicator indicator, Index dim, double probe_scale = 1.0,
                                 std::uint64_t probe_seed = 0);

  BalanceKind kind() const noexcept { return kind_; }
  bool is_none() const noexcept { return kind_ == BalanceKind::none; }
  /// Dimension of b; 0 for the trivial criterion.
  Index dim() const noexcept { return dim_; }
  double threshold() const noexcept { return a_; }
  const Matrix& metric() const noexcept { return metric_; }
  /// Lower Cholesky factor L of the metric (metric = L L').
  const Matrix& metric_factor() const noexcept { return metric_l_; }

  /// b' metric^{-1} b (mahalanobis only).
  double quadratic_form(const Vector& b) const;
  bool accepts(const Vector& b) const;

 private:
  BalanceKind kind_ = BalanceKind::none;
  Index dim_ = 0;
  double a_ = 0.0;
  Matrix metric_;
  Matrix metric_l_;
  std::shared_ptr<const Indicator> indicator_;
};

bool is_balanced(const BalanceCriterion& criterion, const Vector& scaled_delta);

struct CriterionCheck {
  bool passed = true;
  std::string message;
};

/// Randomized spot-check of the structural requirements on phi: origin
/// accepted, phi(b) == phi(-b), and convex combinations of accepted
/// points accepted.
CriterionCheck probe_criterion(const BalanceCriterion& criterion, Index trials, double scale,
                               std::uint64_t seed);

/// Exact covariance over complete randomization of sqrt(N) * delta_hat:
/// N * Sigma_x * (1/n1 + 1/n0).
Matrix design_metric(const Matrix& x, Index n1);

enum class DesignKind { cre, rerandomized, paired, multiarm };

const char* to_string(DesignKind kind) noexcept;

/// The set Omega of admissible assignments.
class AssignmentSpace {
 public:
  static AssignmentSpace cre(Index n_units, Index n_treated);
  static AssignmentSpace rerandomized(Matrix covariates, Index n_treated, BalanceCriterion criterion);
  static AssignmentSpace paired(std::vector<UnitPair> pairs);
  /// Consecutive rows (0,1), (2,3), ... form the pairs.
  static AssignmentSpace paired_consecutive(Index n_pairs);
  static AssignmentSpace multiarm(std::vector<Index> arm_sizes);

  DesignKind kind() const noexcept { return kind_; }
  Index n_units() const noexcept { return n_; }
  int arm_count() const noexcept { return static_cast<int>(arm_sizes_.size()); }
  const std::vector<Index>& arm_sizes() const noexcept { return arm_sizes_; }
  Index n_treated() const noexcept { return arm_sizes_.size() == 2 ? arm_sizes_[1] : 0; }
  const std::vector<UnitPair>& pairs() const noexcept { return pairs_; }
  const BalanceCriterion& criterion() const noexcept { return criterion_; }
  const Matrix& covariates() const noexcept { return x_; }

  /// sqrt(N) * delta_hat(x, w) for rerandomized spaces.
  Vector scaled_delta(const Assignment& w) const;
  bool contains(const Assignment& w) const;

  /// |Omega| for unconstrained designs and the size of the complete
  /// randomization super-space for rerandomized ones; saturates at 2^64-1.
  std::uint64_t super_cardinality() const noexcept { return super_cardinality_; }

 private:
  AssignmentSpace() = default;

  DesignKind kind_ = DesignKind::cre;
  Index n_ = 0;
  std::vector<Index> arm_sizes_;
  std::vector<UnitPair> pairs_;
  BalanceCriterion criterion_;
  Matrix x_;
  std::uint64_t super_cardinality_ = 0;
};

/// Saturating binomial coefficient.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept;

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;
inline constexpr std::uint64_t kDefaultMaxAttempts = 1'000'000;

/// Every element of Omega exactly once in lexicographic order of the
/// assignment vector (paired spaces: in lexicographic order of the labels of
/// each pair's first unit).
std::vector<Assignment> enumerate(const AssignmentSpace& space,
                                  std::uint64_t cap = kDefaultEnumerationCap);

struct SamplingOptions {
  unsigned threads = 1;
  std::uint64_t max_attempts = kDefaultMaxAttempts;
  StreamDomain domain = StreamDomain::assignment;
  /// Draw j uses substream first_stream + j.
  std::uint64_t first_stream = 0;
};

struct SampleResult {
  std::vector<Assignment> draws;
  std::uint64_t attempts = 0;
  double acceptance_rate = 1.0;
};

/// One uniform draw from the unconstrained super-space on `rng`.
Assignment draw_super(const AssignmentSpace& space, CounterRng& rng);

/// Independent uniform draws from Omega. Draw j consumes its own
/// counter-based substream, so the sequence does not depend on threads.
SampleResult sample_uniform(const AssignmentSpace& space, std::size_t count, std::uint64_t seed,
                            const SamplingOptions& options = {});

}  // namespace prepivot
