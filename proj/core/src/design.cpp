// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "prepivot/error.hpp"
#include "prepivot/parallel.hpp"

namespace prepivot {

BalanceCriterion::BalanceCriterion() = default;

BalanceCriterion BalanceCriterion::none() { return BalanceCriterion(); }

BalanceCriterion BalanceCriterion::mahalanobis(double a, const Matrix& metric) {
  require(a > 0.0 && std::isfinite(a), ErrorKind::invalid_argument,
          "mahalanobis threshold must be positive");
  require(metric.rows() == metric.cols() && metric.rows() >= 1, ErrorKind::dimension_mismatch,
          "mahalanobis metric must be square and nonempty");
  Eigen::LLT<Matrix> llt(metric);
  require(llt.info() == Eigen::Success && metric.allFinite(), ErrorKind::decomposition,
          "mahalanobis metric is not positive definite");
  BalanceCriterion c;
  c.kind_ = BalanceKind::mahalanobis;
  c.dim_ = metric.rows();
  c.a_ = a;
  c.metric_ = metric;
  c.metric_l_ = llt.matrixL();
  return c;
}

BalanceCriterion BalanceCriterion::custom(Indicator indicator, Index dim, double probe_scale,
                                          std::uint64_t probe_seed) {
  require(static_cast<bool>(indicator), ErrorKind::invalid_argument, "custom criterion needs an indicator");
  require(dim >= 1, ErrorKind::invalid_argument, "custom criterion needs a positive dimension");
  BalanceCriterion c;
  c.kind_ = BalanceKind::custom;
  c.dim_ = dim;
  c.indicator_ = std::make_shared<const Indicator>(std::move(indicator));
  const CriterionCheck check = probe_criterion(c, 200, probe_scale, probe_seed);
  require(check.passed, ErrorKind::invalid_argument, "custom criterion rejected: " + check.message);
  return c;
}

double BalanceCriterion::quadratic_form(const Vector& b) const {
  require(kind_ == BalanceKind::mahalanobis, ErrorKind::invalid_argument,
          "quadratic form is only defined for mahalanobis criteria");
  require(b.size() == dim_, ErrorKind::dimension_mismatch, "imbalance vector has the wrong length");
  const Vector u = metric_l_.triangularView<Eigen::Lower>().solve(b);
  return u.squaredNorm();
}

bool BalanceCriterion::accepts(const Vector& b) const {
  switch (kind_) {
    case BalanceKind::none:
      return true;
    case BalanceKind::mahalanobis:
      return quadratic_form(b) <= a_;
    case BalanceKind::custom:
      require(b.size() == dim_, ErrorKind::dimension_mismatch, "imbalance vector has the wrong length");
      return (*indicator_)(b);
  }
  return false;
}

bool is_balanced(const BalanceCriterion& criterion, const Vector& scaled_delta) {
  return criterion.accepts(scaled_delta);
}

CriterionCheck probe_criterion(const BalanceCriterion& criterion, Index trials, double scale,
                               std::uint64_t seed) {
  if (criterion.is_none()) return {};
  const Index k = criterion.dim();
  if (!criterion.accepts(Vector::Zero(k))) return {false, "origin is not accepted"};
  CounterRng rng(seed, stream_id(StreamDomain::validation, 0));
  boost::random::normal_distribution<double> normal;
  boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    Vector b(k);
    for (Index j = 0; j < k; ++j) b[j] = scale * normal(rng);
    return b;
  };
  std::vector<Vector> accepted;
  for (Index t = 0; t < trials; ++t) {
    const Vector b = draw();
    const bool in = criterion.accepts(b);
    if (in != criterion.accepts(-b)) return {false, "phi(b) != phi(-b) at a probed point"};
    if (in) accepted.push_back(b);
  }
  for (std::size_t i = 1; i < accepted.size(); ++i) {
    const double lambda = unit(rng);
    const Vector mix = lambda * accepted[i - 1] + (1.0 - lambda) * accepted[i];
    if (!criterion.accepts(mix)) return {false, "a convex combination of accepted points is rejected"};
  }
  return {};
}

Matrix design_metric(const Matrix& x, Index n1) {
  const Index n = x.rows();
  require(n1 >= 1 && n1 < n, ErrorKind::invalid_design, "n1 must lie in [1, N-1]");
  const Matrix sigma = sample_cross_covariance(x, x);
  const double scale = static_cast<double>(n) *
                       (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n - n1));
  return sigma * scale;
}

const char* to_string(DesignKind kind) noexcept {
  switch (kind) {
    case DesignKind::cre: return "cre";
    case DesignKind::rerandomized: return "rerand";
    case DesignKind::paired: return "paired";
    case DesignKind::multiarm: return "multiarm";
  }
  return "unknown";
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) noexcept {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // acc * (n - k + i) / i stays integral at every step.
    acc = acc * (n - k + i) / i;
    if (acc > kMax) return kMax;
  }
  return static_cast<std::uint64_t>(acc);
}

namespace {

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) noexcept {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  return p > std::numeric_limits<std::uint64_t>::max() ? std::numeric_limits<std::uint64_t>::max()
                                                       : static_cast<std::uint64_t>(p);
}

}  // namespace

AssignmentSpace AssignmentSpace::cre(Index n_units, Index n_treated) {
  require(n_units >= 2, ErrorKind::invalid_design, "design needs at least 2 units");
  require(n_treated >= 1 && n_treated < n_units, ErrorKind::invalid_design,
          "n1 must lie in [1, N-1]");
  AssignmentSpace s;
  s.kind_ = DesignKind::cre;
  s.n_ = n_units;
  s.arm_sizes_ = {n_units - n_treated, n_treated};
  s.super_cardinality_ = binomial(n_units, n_treated);
  return s;
}

AssignmentSpace AssignmentSpace::rerandomized(Matrix covariates, Index n_treated,
                                              BalanceCriterion criterion) {
  AssignmentSpace s = cre(covariates.rows(), n_treated);
  require(criterion.is_none() || criterion.dim() == covariates.cols(), ErrorKind::dimension_mismatch,
          "criterion dimension must equal the number of covariates");
  s.kind_ = DesignKind::rerandomized;
  s.x_ = std::move(covariates);
  s.criterion_ = std::move(criterion);
  return s;
}

AssignmentSpace AssignmentSpace::paired(std::vector<UnitPair> pairs) {
  require(pairs.size() >= 2, ErrorKind::invalid_design, "paired design needs at least 2 pairs");
  const Index n = static_cast<Index>(2 * pairs.size());
  std::vector<std::uint8_t> seen(n, 0);
  for (const auto& [i, j] : pairs) {
    require(i >= 0 && i < n && j >= 0 && j < n && i != j && !seen[i] && !seen[j],
            ErrorKind::invalid_design, "pairs must partition the units");
    seen[i] = seen[j] = 1;
  }
  AssignmentSpace s;
  s.kind_ = DesignKind::paired;
  s.n_ = n;
  s.arm_sizes_ = {n / 2, n / 2};
  s.pairs_ = std::move(pairs);
  s.super_cardinality_ = s.pairs_.size() >= 64 ? std::numeric_limits<std::uint64_t>::max()
                                              : (std::uint64_t{1} << s.pairs_.size());
  return s;
}

AssignmentSpace AssignmentSpace::paired_consecutive(Index n_pairs) {
  std::vector<UnitPair> pairs;
  for (Index p = 0; p < n_pairs; ++p) pairs.push_back({2 * p, 2 * p + 1});
  return paired(std::move(pairs));
}

AssignmentSpace AssignmentSpace::multiarm(std::vector<Index> arm_sizes) {
  require(arm_sizes.size() >= 2 && arm_sizes.size() <= 255, ErrorKind::invalid_design,
          "multi-arm design needs between 2 and 255 arms");
  Index n = 0;
  for (Index a : arm_sizes) {
    require(a >= 1, ErrorKind::invalid_design, "every arm needs at least one unit");
    n += a;
  }
  AssignmentSpace s;
  s.kind_ = DesignKind::multiarm;
  s.n_ = n;
  s.arm_sizes_ = std::move(arm_sizes);
  std::uint64_t card = 1;
  Index remaining = n;
  for (Index a : s.arm_sizes_) {
    card = saturating_mul(card, binomial(remaining, a));
    remaining -= a;
  }
  s.super_cardinality_ = card;
  return s;
}

Vector AssignmentSpace::scaled_delta(const Assignment& w) const {
  require(x_.cols() > 0, ErrorKind::invalid_design, "space carries no covariates");
  return difference_in_means(x_, w) * std::sqrt(static_cast<double>(n_));
}

bool AssignmentSpace::contains(const Assignment& w) const {
  if (static_cast<Index>(w.size()) != n_) return false;
  std::vector<Index> counts(arm_sizes_.size(), 0);
  for (auto label : w) {
    if (label >= arm_sizes_.size()) return false;
    ++counts[label];
  }
  if (counts != arm_sizes_) return false;
  if (kind_ == DesignKind::paired) {
    for (const auto& [i, j] : pairs_) {
      if (w[i] + w[j] != 1) return false;
    }
  }
  if (kind_ == DesignKind::rerandomized) return criterion_.accepts(scaled_delta(w));
  return true;
}

std::vector<Assignment> enumerate(const AssignmentSpace& space, std::uint64_t cap) {
  const std::uint64_t card = space.super_cardinality();
  if (card > cap) {
    std::ostringstream msg;
    msg << "assignment space has " << card << " elements, above the enumeration cap of " << cap
        << "; use sampled mode";
    fail(ErrorKind::too_large, msg.str());
  }
  std::vector<Assignment> out;
  const Index n = space.n_units();
  if (space.kind() == DesignKind::paired) {
    const auto& pairs = space.pairs();
    const std::size_t n_pairs = pairs.size();
    out.reserve(card);
    for (std::uint64_t mask = 0; mask < card; ++mask) {
      Assignment w(n, 0);
      for (std::size_t p = 0; p < n_pairs; ++p) {
        const bool first_treated = (mask >> (n_pairs - 1 - p)) & 1u;
        w[pairs[p][0]] = first_treated ? 1 : 0;
        w[pairs[p][1]] = first_treated ? 0 : 1;
      }
      out.push_back(std::move(w));
    }
    return out;
  }
  Assignment w;
  w.reserve(n);
  for (std::size_t a = 0; a < space.arm_sizes().size(); ++a) {
    w.insert(w.end(), space.arm_sizes()[a], static_cast<std::uint8_t>(a));
  }
  const bool filter = space.kind() == DesignKind::rerandomized;
  if (!filter) out.reserve(card);
  do {
    if (!filter || space.criterion().accepts(space.scaled_delta(w))) out.push_back(w);
  } while (std::next_permutation(w.begin(), w.end()));
  require(!out.empty(), ErrorKind::infeasible_balance, "no assignment satisfies the balance criterion");
  return out;
}

Assignment draw_super(const AssignmentSpace& space, CounterRng& rng) {
  const Index n = space.n_units();
  Assignment w(n, 0);
  switch (space.kind()) {
    case DesignKind::cre:
    case DesignKind::rerandomized: {
      // Floyd's algorithm: a uniform n1-subset with exactly n1 integer draws.
      const Index n1 = space.n_treated();
      for (Index j = n - n1; j < n; ++j) {
        boost::random::uniform_int_distribution<Index> pick(0, j);
        const Index t = pick(rng);
        if (w[t]) {
          w[j] = 1;
        } else {
          w[t] = 1;
        }
      }
      break;
    }
    case DesignKind::paired:
      for (const auto& [i, j] : space.pairs()) {
        const bool first = (rng() >> 63) != 0;
        w[i] = first ? 1 : 0;
        w[j] = first ? 0 : 1;
      }
      break;
    case DesignKind::multiarm: {
      Index pos = 0;
      for (std::size_t a = 0; a < space.arm_sizes().size(); ++a) {
        for (Index c = 0; c < space.arm_sizes()[a]; ++c) w[pos++] = static_cast<std::uint8_t>(a);
      }
      for (Index i = n - 1; i > 0; --i) {
        boost::random::uniform_int_distribution<Index> pick(0, i);
        std::swap(w[i], w[pick(rng)]);
      }
      break;
    }
  }
  return w;
}

SampleResult sample_uniform(const AssignmentSpace& space, std::size_t count, std::uint64_t seed,
                            const SamplingOptions& options) {
  require(count >= 1, ErrorKind::invalid_argument, "sample count must be at least 1");
  SampleResult result;
  result.draws.resize(count);
  std::vector<std::uint64_t> attempts(count, 0);
  const bool filter = space.kind() == DesignKind::rerandomized;
  parallel_for(count, options.threads, [&](std::size_t j) {
    CounterRng rng(seed, stream_id(options.domain, options.first_stream + j));
    for (std::uint64_t tries = 1;; ++tries) {
      Assignment w = draw_super(space, rng);
      if (!filter || space.criterion().accepts(space.scaled_delta(w))) {
        attempts[j] = tries;
        result.draws[j] = std::move(w);
        return;
      }
      if (tries >= options.max_attempts) {
        std::ostringstream msg;
        msg << "rejection sampling found no balanced assignment in " << tries
            << " attempts (empirical acceptance rate 0 for draw " << j
            << "); the balance criterion is infeasible for these covariates";
        fail(ErrorKind::infeasible_balance, msg.str());
      }
    }
  });
  result.attempts = std::accumulate(attempts.begin(), attempts.end(), std::uint64_t{0});
  result.acceptance_rate = static_cast<double>(count) / static_cast<double>(result.attempts);
  return result;
}

}  // namespace prepivot
