// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "prepivot/design.hpp"
#include "prepivot/error.hpp"
#include "prepivot/estimator.hpp"

using namespace prepivot;

TEST_CASE("balance criteria") {
  const BalanceCriterion m = BalanceCriterion::mahalanobis(1.0, Matrix::Identity(3, 3));
  CHECK(is_balanced(m, Vector::Zero(3)));
  CHECK_FALSE(is_balanced(m, Vector::Unit(3, 0) * 2.0));
  CHECK(is_balanced(m, Vector::Unit(3, 1)));  // boundary accepted
  CHECK(is_balanced(BalanceCriterion::none(), Vector::Constant(3, 1e9)));
  std::mt19937_64 gen(1);
  const BalanceCriterion g = BalanceCriterion::mahalanobis(2.0, oracle::random_spd(gen, 3));
  for (int i = 0; i < 200; ++i) {
    const Vector b = oracle::random_matrix(gen, 3, 1, 1.5);
    CHECK(is_balanced(g, b) == is_balanced(g, Vector(-b)));
  }
  Matrix not_pd = Matrix::Identity(2, 2);
  not_pd(1, 1) = -1;
  CHECK_THROWS_AS(BalanceCriterion::mahalanobis(1.0, not_pd), Error);

  const auto box = [](const Vector& b) { return b.cwiseAbs().maxCoeff() <= 1.0; };
  CHECK_NOTHROW(BalanceCriterion::custom(box, 2));
  const auto shifted = [](const Vector& b) { return b[0] >= -0.5 && b[0] <= 2.0; };
  CHECK_THROWS_AS(BalanceCriterion::custom(shifted, 1), Error);
  const auto excludes_origin = [](const Vector& b) { return b.norm() > 0.1; };
  CHECK_THROWS_AS(BalanceCriterion::custom(excludes_origin, 2), Error);
}

TEST_CASE("enumeration counts and contents") {
  CHECK(enumerate(AssignmentSpace::cre(4, 2)).size() == 6);
  CHECK(enumerate(AssignmentSpace::cre(6, 3)).size() == 20);
  CHECK(enumerate(AssignmentSpace::paired_consecutive(3)).size() == 8);
  CHECK(enumerate(AssignmentSpace::multiarm({2, 2, 2})).size() == 90);
  CHECK(AssignmentSpace::cre(10, 5).super_cardinality() == 252);
  CHECK(binomial(60, 30) == 118264581564861424ull);

  const auto all = enumerate(AssignmentSpace::cre(8, 3));
  const auto ref = oracle::all_cre(8, 3);
  CHECK(std::set<Assignment>(all.begin(), all.end()) == std::set<Assignment>(ref.begin(), ref.end()));

  for (const auto& w : enumerate(AssignmentSpace::paired_consecutive(4))) {
    for (int p = 0; p < 4; ++p) CHECK(w[2 * p] + w[2 * p + 1] == 1);
  }
  CHECK_THROWS_AS(enumerate(AssignmentSpace::cre(40, 20), 1000), Error);
}

TEST_CASE("rerandomized spaces filter the complete randomization space") {
  std::mt19937_64 gen(2);
  const Matrix x = oracle::random_matrix(gen, 10, 2);
  const Matrix metric = design_metric(x, 5);
  const auto full = enumerate(AssignmentSpace::cre(10, 5));
  const auto none = enumerate(AssignmentSpace::rerandomized(x, 5, BalanceCriterion::none()));
  CHECK(none.size() == full.size());
  const AssignmentSpace rr = AssignmentSpace::rerandomized(x, 5, BalanceCriterion::mahalanobis(1.0, metric));
  const auto kept = enumerate(rr);
  CHECK(kept.size() < full.size());
  std::size_t manual = 0;
  for (const auto& w : full) {
    Vector d(2);
    for (int j = 0; j < 2; ++j) d[j] = std::sqrt(10.0) * oracle::dim(x.col(j), w);
    if (d.dot(metric.ldlt().solve(d)) <= 1.0) ++manual;
    CHECK(rr.contains(w) == (d.dot(metric.ldlt().solve(d)) <= 1.0));
  }
  CHECK(kept.size() == manual);
  CHECK_THROWS_AS(enumerate(AssignmentSpace::rerandomized(x, 5, BalanceCriterion::mahalanobis(1e-12, metric))),
                  Error);
}

TEST_CASE("design metric is the randomization covariance of the scaled imbalance") {
  std::mt19937_64 gen(4);
  const Matrix x = oracle::random_matrix(gen, 9, 2);
  const auto all = oracle::all_cre(9, 4);
  Matrix acc = Matrix::Zero(2, 2);
  for (const auto& w : all) {
    Vector d(2);
    for (int j = 0; j < 2; ++j) d[j] = std::sqrt(9.0) * oracle::dim(x.col(j), w);
    acc += d * d.transpose();
  }
  acc /= static_cast<double>(all.size());
  CHECK((acc - design_metric(x, 4)).norm() < 1e-10);
}

TEST_CASE("uniform sampling") {
  const AssignmentSpace s = AssignmentSpace::cre(4, 2);
  const std::size_t n = 60000;
  const SampleResult r = sample_uniform(s, n, 11);
  std::map<Assignment, std::size_t> freq;
  for (const auto& w : r.draws) ++freq[w];
  CHECK(freq.size() == 6);
  const double se = std::sqrt(n * (1.0 / 6) * (5.0 / 6));
  for (const auto& [w, c] : freq) CHECK(std::abs(static_cast<double>(c) - n / 6.0) <= 3 * se);

  SamplingOptions par;
  par.threads = 4;
  const SampleResult r4 = sample_uniform(s, 5000, 11, par);
  const SampleResult r1 = sample_uniform(s, 5000, 11);
  CHECK(r4.draws == r1.draws);

  for (const auto& w : sample_uniform(AssignmentSpace::multiarm({3, 2, 4}), 200, 3).draws) {
    CHECK(std::count(w.begin(), w.end(), 0) == 3);
    CHECK(std::count(w.begin(), w.end(), 1) == 2);
    CHECK(std::count(w.begin(), w.end(), 2) == 4);
  }
  for (const auto& w : sample_uniform(AssignmentSpace::paired_consecutive(5), 200, 3).draws) {
    for (int p = 0; p < 5; ++p) CHECK(w[2 * p] + w[2 * p + 1] == 1);
  }

  std::mt19937_64 gen(6);
  const Matrix x = oracle::random_matrix(gen, 30, 2);
  const AssignmentSpace impossible =
      AssignmentSpace::rerandomized(x, 15, BalanceCriterion::mahalanobis(1e-14, design_metric(x, 15)));
  SamplingOptions few;
  few.max_attempts = 200;
  try {
    sample_uniform(impossible, 1, 1, few);
    FAIL("expected infeasible balance");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible_balance);
  }
}
