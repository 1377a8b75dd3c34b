// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/frt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "prepivot/error.hpp"
#include "prepivot/parallel.hpp"

namespace prepivot {

const char* to_string(ReferenceMode mode) noexcept {
  return mode == ReferenceMode::exact ? "exact" : "sampled";
}

std::vector<double> ReferenceDistribution::sorted() const {
  std::vector<double> out = values;
  std::sort(out.begin(), out.end());
  return out;
}

RandomizationEngine::RandomizationEngine(const AssignmentSpace& space, FrtConfig cfg)
    : space_(space), cfg_(std::move(cfg)) {
  require(cfg_.alpha > 0.0 && cfg_.alpha < 1.0, ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  cfg_.gauss.seed = cfg_.seed;
  if (cfg_.mode == ReferenceMode::exact) {
    assignments_ = enumerate(space_, cfg_.enumeration_cap);
    attempts_ = space_.super_cardinality();
    acceptance_rate_ = static_cast<double>(assignments_.size()) / static_cast<double>(attempts_);
  } else {
    require(cfg_.draws_omega >= 1, ErrorKind::invalid_argument, "sampled mode needs at least one draw");
    SamplingOptions opts;
    opts.threads = cfg_.threads;
    opts.max_attempts = cfg_.max_attempts;
    SampleResult sample = sample_uniform(space_, cfg_.draws_omega, cfg_.seed, opts);
    assignments_ = std::move(sample.draws);
    attempts_ = sample.attempts;
    acceptance_rate_ = sample.acceptance_rate;
  }
}

namespace {

void check_compatible(const ObservedStudy& study, const AssignmentSpace& space) {
  require(study.n_units() == space.n_units(), ErrorKind::invalid_design,
          "study and design disagree on the number of units");
  require(study.arm_count() == space.arm_count(), ErrorKind::invalid_design,
          "study and design disagree on the number of arms");
  require(study.arm_sizes() == space.arm_sizes(), ErrorKind::invalid_design,
          "study arm sizes differ from the design's");
  if (space.kind() == DesignKind::paired) {
    require(study.pairs() == space.pairs(), ErrorKind::invalid_design,
            "study pairs differ from the design's");
  }
  if (space.kind() == DesignKind::rerandomized) {
    require(study.covariates() == space.covariates(), ErrorKind::invalid_design,
            "rerandomized design was built on different covariates");
  }
  require(space.contains(study.assignment()), ErrorKind::invalid_design,
          "observed assignment is not an element of the design's assignment space");
}

EstimatorSpec check_estimator(const EstimatorSpec& estimator, const AssignmentSpace& space) {
  switch (space.kind()) {
    case DesignKind::paired:
      require(estimator.kind == EstimatorKind::paired || estimator.kind == EstimatorKind::dim,
              ErrorKind::invalid_design, "paired designs use the paired estimator");
      return EstimatorSpec::paired();
    case DesignKind::multiarm:
      require(estimator.kind == EstimatorKind::contrast, ErrorKind::invalid_design,
              "multi-arm designs need a contrast estimator");
      return estimator;
    default:
      require(estimator.kind == EstimatorKind::dim || estimator.kind == EstimatorKind::lin_adjusted,
              ErrorKind::invalid_design, "two-arm designs use the dim or lin estimator");
      return estimator;
  }
}

struct Evaluated {
  double statistic = 0.0;
  double key = 0.0;
  PrepivotValue prepivot;
};

}  // namespace

TestReport RandomizationEngine::run(const ObservedStudy& study, const EstimatorSpec& estimator_in,
                                    const std::vector<Analysis>& analyses, const Vector& shift) const {
  require(!analyses.empty(), ErrorKind::invalid_argument, "no analyses requested");
  check_compatible(study, space_);
  const EstimatorSpec estimator = check_estimator(estimator_in, space_);

  Matrix outcomes;
  Vector c = shift.size() ? shift : Vector::Zero(study.outcome_dim());
  if (study.arm_count() == 2) {
    outcomes = shifted_outcomes(study, c);
  } else {
    require(c.isZero(0.0), ErrorKind::invalid_argument, "multi-arm designs do not take an effect shift");
    outcomes = study.outcomes();
  }

  bool with_pooled = false;
  for (const auto& a : analyses) with_pooled = with_pooled || a.statistic.needs_pooled();
  const BalanceCriterion& criterion = space_.criterion();
  const AssignmentEvaluator evaluator(outcomes, study.covariates(), study.pairs(), study.arm_count(), estimator,
                                      !criterion.is_none(), with_pooled);

  const std::size_t n_ref = assignments_.size();
  const std::size_t n_an = analyses.size();
  const bool exact = cfg_.mode == ReferenceMode::exact;

  std::size_t observed_pos = 0;
  if (exact) {
    const auto it = std::find(assignments_.begin(), assignments_.end(), study.assignment());
    require(it != assignments_.end(), ErrorKind::invalid_design, "observed assignment missing from the enumeration");
    observed_pos = static_cast<std::size_t>(it - assignments_.begin());
  }

  auto evaluate_all = [&](const Assignment& w, std::uint64_t slot, Evaluated* out) {
    const AssignmentEstimate est = evaluator.estimate(w);
    for (std::size_t a = 0; a < n_an; ++a) {
      const AnalysisValue v = evaluate_analysis(est, analyses[a].statistic, analyses[a].prepivot, criterion,
                                                cfg_.gauss, gaussian_stream(slot, a));
      out[a].statistic = v.statistic;
      out[a].key = v.key;
      out[a].prepivot = v.prepivot;
    }
  };

  // Reference slot j uses Gaussian stream j + 1. In exact mode the observed
  // assignment is the element at observed_pos and shares its stream, so g
  // is one fixed function on Omega; in sampled mode it takes stream 0.
  std::vector<Evaluated> values(n_ref * n_an);
  parallel_for(n_ref, cfg_.threads, [&](std::size_t j) {
    evaluate_all(assignments_[j], j + 1, &values[j * n_an]);
  });
  std::vector<Evaluated> observed(n_an);
  if (exact) {
    std::copy_n(&values[observed_pos * n_an], n_an, observed.begin());
  } else {
    evaluate_all(study.assignment(), 0, observed.data());
  }

  TestReport report;
  report.alpha = cfg_.alpha;
  report.mode = cfg_.mode;
  report.reference_size = n_ref;
  report.seed = cfg_.seed;
  report.draws_omega = exact ? n_ref : cfg_.draws_omega;
  report.draws_gauss = cfg_.gauss.draws;
  report.gauss_method = cfg_.gauss.method;
  report.attempts = attempts_;
  report.acceptance_rate = acceptance_rate_;
  report.observed_position = observed_pos;
  report.shift = c;

  for (std::size_t a = 0; a < n_an; ++a) {
    AnalysisReport ar;
    ar.name = analyses[a].name;
    ar.statistic = analyses[a].statistic;
    ar.prepivoted = analyses[a].prepivot;
    ar.statistic_observed = observed[a].statistic;
    ar.key_observed = observed[a].key;
    if (ar.prepivoted) {
      ar.g_observed = observed[a].prepivot.g;
      ar.large_sample_p = observed[a].prepivot.upper;
      ar.route = observed[a].prepivot.route;
      ar.mc_std_error = observed[a].prepivot.mc_std_error;
      ar.denominator_estimate = observed[a].prepivot.denominator_estimate;
    } else {
      ar.large_sample_p = std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t count = 0;
    std::size_t repaired = 0;
    ar.reference.mode = cfg_.mode;
    ar.reference.includes_observed = exact;
    if (cfg_.keep_reference) ar.reference.values.reserve(n_ref);
    for (std::size_t j = 0; j < n_ref; ++j) {
      const Evaluated& e = values[j * n_an + a];
      count += e.key >= ar.key_observed ? 1 : 0;
      repaired += e.prepivot.repaired ? 1 : 0;
      if (cfg_.keep_reference) ar.reference.values.push_back(e.key);
    }
    ar.count_ge = count;
    ar.repaired_count = repaired;
    ar.p_value = exact ? static_cast<double>(count) / static_cast<double>(n_ref)
                       : static_cast<double>(count + 1) / static_cast<double>(n_ref + 1);
    ar.reject = ar.p_value <= cfg_.alpha;
    if (repaired > 0) {
      report.warnings.push_back(ar.name + ": covariance repaired to positive definite at " +
                                std::to_string(repaired) + " assignments");
    }
    report.analyses.push_back(std::move(ar));
  }
  return report;
}

TestReport randomization_test(const ObservedStudy& study, const AssignmentSpace& space,
                              const EstimatorSpec& estimator, const StatisticSpec& statistic,
                              const FrtConfig& cfg) {
  const RandomizationEngine engine(space, cfg);
  return engine.run(study, estimator, {{"prepivoted", statistic, true}});
}

TestReport raw_statistic_test(const ObservedStudy& study, const AssignmentSpace& space,
                              const EstimatorSpec& estimator, const StatisticSpec& statistic,
                              const FrtConfig& cfg) {
  const RandomizationEngine engine(space, cfg);
  return engine.run(study, estimator, {{"raw", statistic, false}});
}

double large_sample_test(const ObservedStudy& study, const AssignmentSpace& space,
                         const EstimatorSpec& estimator, const StatisticSpec& statistic,
                         const FrtConfig& cfg) {
  check_compatible(study, space);
  const EstimatorSpec est = check_estimator(estimator, space);
  GaussEngineConfig gauss = cfg.gauss;
  gauss.seed = cfg.seed;
  return prepivot_assignment(study, study.assignment(), statistic, est, space.criterion(), gauss, 0).upper;
}

ReferenceDistribution oracle_randomization_distribution(const FinitePopulation& pop,
                                                        const AssignmentSpace& space,
                                                        const EstimatorSpec& estimator_in,
                                                        const Analysis& analysis, const FrtConfig& cfg) {
  require(pop.n_units() == space.n_units(), ErrorKind::invalid_design,
          "population and design disagree on the number of units");
  require(space.arm_count() == 2, ErrorKind::invalid_design, "oracle distributions need a two-arm design");
  const EstimatorSpec estimator = check_estimator(estimator_in, space);
  std::vector<Assignment> ws;
  if (cfg.mode == ReferenceMode::exact) {
    ws = enumerate(space, cfg.enumeration_cap);
  } else {
    SamplingOptions opts;
    opts.threads = cfg.threads;
    opts.max_attempts = cfg.max_attempts;
    ws = sample_uniform(space, cfg.draws_omega, cfg.seed, opts).draws;
  }
  GaussEngineConfig gauss = cfg.gauss;
  gauss.seed = cfg.seed;
  const BalanceCriterion& criterion = space.criterion();
  ReferenceDistribution dist;
  dist.mode = cfg.mode;
  dist.values.resize(ws.size());
  parallel_for(ws.size(), cfg.threads, [&](std::size_t j) {
    Matrix y(pop.n_units(), pop.outcome_dim());
    for (Index i = 0; i < pop.n_units(); ++i) y.row(i) = ws[j][i] ? pop.y1().row(i) : pop.y0().row(i);
    const AssignmentEvaluator evaluator(y, pop.x(), space.pairs(), 2, estimator, !criterion.is_none(),
                                        analysis.statistic.needs_pooled());
    const AnalysisValue v = evaluate_analysis(evaluator.estimate(ws[j]), analysis.statistic, analysis.prepivot,
                                              criterion, gauss, gaussian_stream(j + 1, 0));
    dist.values[j] = analysis.prepivot ? v.prepivot.g : v.statistic;
  });
  return dist;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  require(std::isfinite(lo) && std::isfinite(hi) && step > 0.0 && hi >= lo, ErrorKind::invalid_argument,
          "grid needs finite lo <= hi and a positive step");
  const double span = (hi - lo) / step;
  require(span <= 1e6, ErrorKind::invalid_argument, "grid has more than a million points");
  const auto count = static_cast<std::size_t>(std::floor(span + 0.5)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  return grid;
}

ConfidenceSet confidence_set(const ObservedStudy& study, const AssignmentSpace& space,
                             const EstimatorSpec& estimator, const Analysis& analysis, const FrtConfig& cfg,
                             const std::vector<double>& grid) {
  require(study.outcome_dim() == 1, ErrorKind::dimension_mismatch, "confidence sets need a single outcome");
  require(study.arm_count() == 2, ErrorKind::invalid_design, "confidence sets need a two-arm design");
  require(!grid.empty(), ErrorKind::invalid_argument, "empty grid");
  const RandomizationEngine engine(space, cfg);
  ConfidenceSet out;
  out.grid = grid;
  out.p_values.resize(grid.size());
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Vector c(1);
    c[0] = grid[i];
    const TestReport r = engine.run(study, estimator, {analysis}, c);
    out.p_values[i] = r.analyses[0].p_value;
    in[i] = out.p_values[i] > cfg.alpha ? 1 : 0;
    if (in[i]) out.accepted.push_back(grid[i]);
  }
  if (out.accepted.empty()) {
    out.warnings.push_back("no grid point accepted; widen the grid");
    return out;
  }
  const auto first = std::find(in.begin(), in.end(), 1) - in.begin();
  const auto last = in.rend() - std::find(in.rbegin(), in.rend(), 1) - 1;
  out.is_interval = std::all_of(in.begin() + first, in.begin() + last + 1, [](auto v) { return v == 1; });
  out.lower = grid[first];
  out.upper = grid[last];
  if (in.front() || in.back()) out.warnings.push_back("accepted set touches the grid boundary; widen the grid");
  return out;
}

}  // namespace prepivot
