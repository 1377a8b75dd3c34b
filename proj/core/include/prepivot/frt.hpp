// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prepivot/design.hpp"
#include "prepivot/prepivot.hpp"

namespace prepivot {

enum class ReferenceMode { exact, sampled };

const char* to_string(ReferenceMode mode) noexcept;

/// One statistic in a test battery, optionally prepivoted.
struct Analysis {
  std::string name;
  StatisticSpec statistic;
  bool prepivot = true;
};

struct FrtConfig {
  ReferenceMode mode = ReferenceMode::sampled;
  std::size_t draws_omega = 1000;
  /// Gaussian draws and route. The Gaussian seed is always the master seed;
  /// separate stream domains keep it apart from assignment sampling.
  GaussEngineConfig gauss;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  std::uint64_t max_attempts = kDefaultMaxAttempts;
  double alpha = 0.05;
  /// Keep the per-assignment keys in the report.
  bool keep_reference = true;
};

struct ReferenceDistribution {
  /// Values in enumeration / draw order (keys for tests, statistic or g
  /// values for oracle distributions).
  std::vector<double> values;
  ReferenceMode mode = ReferenceMode::sampled;
  bool includes_observed = false;

  std::vector<double> sorted() const;
};

struct AnalysisReport {
  std::string name;
  StatisticSpec statistic;
  bool prepivoted = false;
  double statistic_observed = 0.0;
  double g_observed = 0.0;     // prepivoted analyses only
  double key_observed = 0.0;
  double p_value = 1.0;
  /// 1 - g_observed (prepivoted analyses only, NaN otherwise).
  double large_sample_p = 0.0;
  bool reject = false;
  std::size_t count_ge = 0;
  GaussRoute route = GaussRoute::closed_normal;
  double mc_std_error = 0.0;
  double denominator_estimate = 1.0;
  std::size_t repaired_count = 0;
  ReferenceDistribution reference;
};

struct TestReport {
  std::vector<AnalysisReport> analyses;
  double alpha = 0.05;
  ReferenceMode mode = ReferenceMode::sampled;
  std::size_t reference_size = 0;
  std::uint64_t seed = 0;
  std::size_t draws_omega = 0;
  std::size_t draws_gauss = 0;
  GaussMethod gauss_method = GaussMethod::automatic;
  std::uint64_t attempts = 0;
  double acceptance_rate = 1.0;
  /// Position of the observed assignment in the enumeration (exact mode).
  std::size_t observed_position = 0;
  Vector shift;
  std::vector<std::string> warnings;
};

/// Holds the reference set of assignments for one design; running several
/// hypotheses or batteries against the same engine reuses it.
class RandomizationEngine {
 public:
  RandomizationEngine(const AssignmentSpace& space, FrtConfig cfg);

  /// Tests H_{F,c} (and, through prepivoting, H_{N,c}) for each analysis.
  /// `shift` defaults to zero.
  TestReport run(const ObservedStudy& study, const EstimatorSpec& estimator,
                 const std::vector<Analysis>& analyses, const Vector& shift = Vector()) const;

  const std::vector<Assignment>& reference_assignments() const noexcept { return assignments_; }
  const FrtConfig& config() const noexcept { return cfg_; }
  const AssignmentSpace& space() const noexcept { return space_; }

 private:
  AssignmentSpace space_;
  FrtConfig cfg_;
  std::vector<Assignment> assignments_;
  std::uint64_t attempts_ = 0;
  double acceptance_rate_ = 1.0;
};

TestReport randomization_test(const ObservedStudy& study, const AssignmentSpace& space,
                              const EstimatorSpec& estimator, const StatisticSpec& statistic,
                              const FrtConfig& cfg);

/// Classical test on the statistic itself, without prepivoting.
TestReport raw_statistic_test(const ObservedStudy& study, const AssignmentSpace& space,
                              const EstimatorSpec& estimator, const StatisticSpec& statistic,
                              const FrtConfig& cfg);

/// p = 1 - g_z with no randomization loop.
double large_sample_test(const ObservedStudy& study, const AssignmentSpace& space,
                         const EstimatorSpec& estimator, const StatisticSpec& statistic,
                         const FrtConfig& cfg);

/// Distribution over Omega of the statistic (or of g, when prepivoted)
/// evaluated on the true potential outcomes revealed by each assignment.
ReferenceDistribution oracle_randomization_distribution(const FinitePopulation& pop,
                                                        const AssignmentSpace& space,
                                                        const EstimatorSpec& estimator,
                                                        const Analysis& analysis, const FrtConfig& cfg);

struct ConfidenceSet {
  std::vector<double> grid;
  std::vector<double> p_values;
  std::vector<double> accepted;
  bool is_interval = false;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::string> warnings;
};

/// Grid inversion for a scalar effect: c is accepted when the test of
/// tau_i = c has p > alpha. All grid points share one reference set.
ConfidenceSet confidence_set(const ObservedStudy& study, const AssignmentSpace& space,
                             const EstimatorSpec& estimator, const Analysis& analysis, const FrtConfig& cfg,
                             const std::vector<double>& grid);

/// lo, lo + step, ..., up to hi (inclusive within half a step).
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace prepivot
