// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "prepivot/error.hpp"
#include "prepivot/frt.hpp"

using namespace prepivot;

namespace {
FrtConfig exact_cfg() {
  FrtConfig cfg;
  cfg.mode = ReferenceMode::exact;
  return cfg;
}

double p_of(const ObservedStudy& s, const AssignmentSpace& space, const char* stat, bool prepivot,
            const FrtConfig& cfg) {
  const StatisticSpec spec = StatisticSpec::from_name(stat);
  const TestReport r = prepivot ? randomization_test(s, space, EstimatorSpec::dim(), spec, cfg)
                                : raw_statistic_test(s, space, EstimatorSpec::dim(), spec, cfg);
  return r.analyses.at(0).p_value;
}
}  // namespace

TEST_CASE("exact p-values live on the lattice of the assignment space") {
  std::mt19937_64 gen(50);
  const Matrix y = oracle::random_matrix(gen, 4, 1);
  const AssignmentSpace space = AssignmentSpace::cre(4, 2);
  for (const auto& z : enumerate(space)) {
    const ObservedStudy s(y, z, Matrix(4, 0));
    for (const char* stat : {"dim", "student"}) {
      const double p = p_of(s, space, stat, true, exact_cfg());
      const double k = p * 6;
      CHECK(std::abs(k - std::round(k)) < 1e-12);
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
    }
  }
  const ObservedStudy flat(Matrix::Constant(6, 1, 1.0), {1, 0, 1, 0, 1, 0}, Matrix(6, 0));
  CHECK(p_of(flat, AssignmentSpace::cre(6, 3), "student", true, exact_cfg()) == 1.0);
  FrtConfig sampled;
  sampled.draws_omega = 99;
  CHECK(p_of(flat, AssignmentSpace::cre(6, 3), "student", true, sampled) == 1.0);
}

TEST_CASE("studentized and unpooled-Hotelling equivalences") {
  std::mt19937_64 gen(51);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix y = oracle::random_matrix(gen, 10, 1);
    const ObservedStudy s(y, oracle::random_cre(gen, 10, 5), Matrix(10, 0));
    const AssignmentSpace space = AssignmentSpace::cre(10, 5);
    CHECK(p_of(s, space, "student", false, exact_cfg()) == p_of(s, space, "dim", true, exact_cfg()));
    CHECK(p_of(s, space, "student", false, exact_cfg()) == p_of(s, space, "student", true, exact_cfg()));
  }
  int differ = 0;
  for (int rep = 0; rep < 6; ++rep) {
    Matrix y = oracle::random_matrix(gen, 10, 2);
    y.col(1) *= 4.0;
    const Assignment z = oracle::random_cre(gen, 10, 3);
    for (Index i = 0; i < 10; ++i)
      if (z[i]) y.row(i) *= 3.0;
    const ObservedStudy s(y, z, Matrix(10, 0));
    const AssignmentSpace space = AssignmentSpace::cre(10, 3);
    CHECK(p_of(s, space, "hotelling", false, exact_cfg()) == p_of(s, space, "hotelling", true, exact_cfg()));
    differ += p_of(s, space, "hotelling-pooled", false, exact_cfg()) !=
              p_of(s, space, "hotelling-pooled", true, exact_cfg());
  }
  CHECK(differ > 0);
}

TEST_CASE("sampled mode counts the observed assignment") {
  std::mt19937_64 gen(52);
  const Matrix y = oracle::random_matrix(gen, 30, 1);
  const ObservedStudy s(y, oracle::random_cre(gen, 30, 15), Matrix(30, 0));
  FrtConfig cfg;
  cfg.draws_omega = 199;
  cfg.seed = 3;
  const TestReport r = randomization_test(s, AssignmentSpace::cre(30, 15), EstimatorSpec::dim(),
                                          StatisticSpec::from_name("student"), cfg);
  const auto& a = r.analyses[0];
  CHECK(a.p_value == doctest::Approx((1.0 + a.count_ge) / 200.0));
  CHECK(a.reference.values.size() == 199);
  CHECK(a.large_sample_p == doctest::Approx(1.0 - a.g_observed));

  FrtConfig par = cfg;
  par.threads = 4;
  const TestReport r4 = randomization_test(s, AssignmentSpace::cre(30, 15), EstimatorSpec::dim(),
                                           StatisticSpec::from_name("student"), par);
  CHECK(r4.analyses[0].reference.values == a.reference.values);
  CHECK(r4.analyses[0].p_value == a.p_value);
}

TEST_CASE("oracle randomization distribution") {
  std::mt19937_64 gen(53);
  const Matrix y = oracle::random_matrix(gen, 8, 1);
  const AssignmentSpace space = AssignmentSpace::cre(8, 4);
  const Analysis raw{"raw", StatisticSpec::from_name("student"), false};
  const ReferenceDistribution truth =
      oracle_randomization_distribution(FinitePopulation(y, y, Matrix(8, 0)), space, EstimatorSpec::dim(), raw,
                                        exact_cfg());
  CHECK(truth.values.size() == 70);
  for (int rep = 0; rep < 3; ++rep) {
    const ObservedStudy s(y, oracle::random_cre(gen, 8, 4), Matrix(8, 0));
    const TestReport r = RandomizationEngine(space, exact_cfg()).run(s, EstimatorSpec::dim(), {raw});
    CHECK(r.analyses[0].reference.sorted() == truth.sorted());
  }

  Matrix y0(6, 1), y1(6, 1);
  y0 << 0, 1, 2, 3, 4, 5;
  y1 << 3, -2, 2, 9, 4, -1;
  const AssignmentSpace six = AssignmentSpace::cre(6, 3);
  const Analysis dim{"raw", StatisticSpec::from_name("dim"), false};
  const auto het = oracle_randomization_distribution(FinitePopulation(y1, y0, Matrix(6, 0)), six,
                                                     EstimatorSpec::dim(), dim, exact_cfg());
  const Assignment z{1, 1, 1, 0, 0, 0};
  Matrix yobs(6, 1);
  for (int i = 0; i < 6; ++i) yobs(i, 0) = z[i] ? y1(i, 0) : y0(i, 0);
  const TestReport r = RandomizationEngine(six, exact_cfg()).run(ObservedStudy(yobs, z, Matrix(6, 0)),
                                                                 EstimatorSpec::dim(), {dim});
  CHECK(het.values.size() == 20);
  CHECK(het.sorted() != r.analyses[0].reference.sorted());

  const ObservedStudy flat(Matrix::Constant(6, 1, 2.0), z, Matrix(6, 0));
  const auto point = oracle_randomization_distribution(FinitePopulation(flat.outcomes(), flat.outcomes(), Matrix(6, 0)),
                                                       six, EstimatorSpec::dim(), dim, exact_cfg());
  CHECK(std::set<double>(point.values.begin(), point.values.end()).size() == 1);
}

TEST_CASE("design compatibility checks") {
  std::mt19937_64 gen(54);
  const Matrix y = oracle::random_matrix(gen, 6, 1);
  const ObservedStudy s(y, {1, 1, 1, 0, 0, 0}, Matrix(6, 0));
  CHECK_THROWS_AS(randomization_test(s, AssignmentSpace::cre(6, 2), EstimatorSpec::dim(),
                                     StatisticSpec::from_name("dim"), exact_cfg()),
                  Error);
  CHECK_THROWS_AS(randomization_test(s, AssignmentSpace::cre(8, 4), EstimatorSpec::dim(),
                                     StatisticSpec::from_name("dim"), exact_cfg()),
                  Error);
  const ObservedStudy ps(y, {1, 0, 0, 1, 1, 0}, Matrix(6, 0), 2, {{{0, 1}}, {{2, 3}}, {{4, 5}}});
  const TestReport pr = randomization_test(ps, AssignmentSpace::paired(ps.pairs()), EstimatorSpec::paired(),
                                           StatisticSpec::from_name("student"), exact_cfg());
  CHECK(pr.reference_size == 8);
  CHECK(pr.analyses[0].p_value * 8 == doctest::Approx(std::round(pr.analyses[0].p_value * 8)));
}

TEST_CASE("confidence sets by inversion") {
  const Index n = 10;
  std::mt19937_64 gen(55);
  const Matrix y0 = oracle::random_matrix(gen, n, 1);
  const Assignment z = oracle::random_cre(gen, n, 5);
  Matrix yobs = y0;
  for (Index i = 0; i < n; ++i)
    if (z[i]) yobs(i, 0) += 1.0;
  const ObservedStudy s(yobs, z, Matrix(n, 0));
  const AssignmentSpace space = AssignmentSpace::cre(n, 5);
  const Analysis pre{"prepivoted", StatisticSpec::from_name("student"), true};
  const std::vector<double> grid = make_grid(-2.0, 4.0, 0.25);
  CHECK(grid.size() == 25);
  FrtConfig cfg = exact_cfg();
  cfg.alpha = 0.1;
  const ConfidenceSet set = confidence_set(s, space, EstimatorSpec::dim(), pre, cfg, grid);
  CHECK(set.p_values.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool in = std::find(set.accepted.begin(), set.accepted.end(), grid[i]) != set.accepted.end();
    CHECK(in == (set.p_values[i] > cfg.alpha));
  }

  FrtConfig loose = cfg;
  loose.alpha = 1e-9;
  const ConfidenceSet all = confidence_set(s, space, EstimatorSpec::dim(), pre, loose, grid);
  CHECK(all.accepted.size() == grid.size());

  const double h = 0.5;
  Matrix moved = yobs;
  for (Index i = 0; i < n; ++i)
    if (z[i]) moved(i, 0) += h;
  std::vector<double> moved_grid;
  for (double c : grid) moved_grid.push_back(c + h);
  const ConfidenceSet shifted =
      confidence_set(ObservedStudy(moved, z, Matrix(n, 0)), space, EstimatorSpec::dim(), pre, cfg, moved_grid);
  REQUIRE(shifted.accepted.size() == set.accepted.size());
  for (std::size_t i = 0; i < set.accepted.size(); ++i)
    CHECK(shifted.accepted[i] == doctest::Approx(set.accepted[i] + h).epsilon(1e-12));
  CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), Error);
}
