// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "prepivot/csv.hpp"
#include "prepivot/error.hpp"
#include "prepivot/population.hpp"

using namespace prepivot;

namespace {
Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}
}  // namespace

TEST_CASE("difference in means") {
  const Assignment w{1, 1, 0, 0};
  CHECK(difference_in_means(col({7, 7, 7, 7}), w)[0] == 0.0);
  CHECK(difference_in_means(col({1, 2, 3, 4}), w)[0] == -2.0);
  const Assignment flipped{0, 0, 1, 1};
  std::mt19937_64 gen(3);
  const Matrix y = oracle::random_matrix(gen, 4, 3);
  CHECK(difference_in_means(y, flipped) == -difference_in_means(y, w));
  CHECK_THROWS_AS(difference_in_means(y, Assignment{1, 1, 1, 1}), Error);
  CHECK_THROWS_AS(difference_in_means(y, Assignment{1, 0, 1}), Error);
}

TEST_CASE("sharp-null imputation") {
  const ObservedStudy s(col({5, 1, 2, 8}), {1, 0, 0, 1}, Matrix(4, 0));
  const FinitePopulation zero = impute_sharp_null(s, Vector::Zero(1));
  CHECK(zero.y1() == s.outcomes());
  CHECK(zero.y0() == s.outcomes());
  const FinitePopulation shifted = impute_sharp_null(s, Vector::Constant(1, 2.0));
  CHECK(shifted.y1()(0, 0) == 5.0);
  CHECK(shifted.y0()(0, 0) == 3.0);
  CHECK(shifted.y1()(1, 0) == 3.0);
  CHECK(shifted.y0()(1, 0) == 1.0);
  CHECK(observe(shifted, s.assignment()).outcomes() == s.outcomes());
}

TEST_CASE("population moments") {
  const FinitePopulation p(col({0, 1, 2}), col({0, 1, 2}), Matrix(3, 0));
  const MomentSet m = population_moments(p);
  CHECK(m.sigma_y1(0, 0) == doctest::Approx(1.0));
  CHECK(m.sigma_tau.norm() == 0.0);

  std::mt19937_64 gen(5);
  const Matrix y1 = oracle::random_matrix(gen, 9, 2), y0 = oracle::random_matrix(gen, 9, 2);
  const Matrix x = oracle::random_matrix(gen, 9, 3);
  std::vector<int> order(9);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);
  Matrix py1(9, 2), py0(9, 2), px(9, 3);
  for (int i = 0; i < 9; ++i) {
    py1.row(i) = y1.row(order[i]);
    py0.row(i) = y0.row(order[i]);
    px.row(i) = x.row(order[i]);
  }
  const MomentSet a = population_moments(FinitePopulation(y1, y0, x));
  const MomentSet b = population_moments(FinitePopulation(py1, py0, px));
  CHECK((a.sigma_y1 - b.sigma_y1).norm() < 1e-13);
  CHECK((a.sigma_tau - b.sigma_tau).norm() < 1e-13);
  CHECK((a.sigma_taux - b.sigma_taux).norm() < 1e-13);
  CHECK((a.mean_x - b.mean_x).norm() < 1e-13);
}

TEST_CASE("oracle covariances") {
  const FinitePopulation p(col({1, 2, 3, 4}), col({1, 2, 3, 4}), Matrix(4, 0));
  const OracleCovariances o = oracle_covariances(p, 2);
  REQUIRE(o.v_full.rows() == 1);
  CHECK(o.v_full(0, 0) == doctest::Approx(20.0 / 3.0));
  CHECK(o.v_full == o.v_tilde);

  std::mt19937_64 gen(8);
  const Matrix y = oracle::random_matrix(gen, 12, 2);
  const Matrix x = oracle::random_matrix(gen, 12, 3);
  const OracleCovariances sharp = oracle_covariances(FinitePopulation(y, y, x), 5);
  CHECK(sharp.v_full.rows() == 5);
  CHECK(sharp.v_full == sharp.v_tilde);

  // The ττ block equals N times the exact randomization variance of DiM.
  const Matrix y0 = oracle::random_matrix(gen, 8, 1);
  const Matrix y1 = y0.array() + oracle::random_matrix(gen, 8, 1).array();
  const OracleCovariances het = oracle_covariances(FinitePopulation(y1, y0, Matrix(8, 0)), 3);
  std::vector<double> dims;
  for (const auto& w : oracle::all_cre(8, 3)) {
    Vector obs(8);
    for (int i = 0; i < 8; ++i) obs[i] = w[i] ? y1(i, 0) : y0(i, 0);
    dims.push_back(oracle::dim(obs, w));
  }
  const double m = oracle::mean_of(dims);
  double v = 0;
  for (double d : dims) v += (d - m) * (d - m);
  v /= static_cast<double>(dims.size());
  CHECK(het.v_full(0, 0) == doctest::Approx(8 * v).epsilon(1e-10));
}

TEST_CASE("study CSV parsing") {
  std::istringstream ok("y1,y2,z,x1\n1,2,1,0.5\n3,4,0,1.5\n5,6,1,2\n7,8,0,-1\n");
  StudyColumns cols;
  const ObservedStudy s = study_from_table(parse_numeric_csv(ok), 2, &cols);
  CHECK(s.n_units() == 4);
  CHECK(s.outcome_dim() == 2);
  CHECK(s.covariate_dim() == 1);
  CHECK(s.assignment() == Assignment{1, 0, 1, 0});
  CHECK(cols.outcomes == std::vector<std::string>{"y1", "y2"});

  std::istringstream no_z("y1,x1\n1,2\n3,4\n");
  try {
    study_from_table(parse_numeric_csv(no_z));
    FAIL("expected a schema error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::schema);
    CHECK(std::string(e.what()).find("'z'") != std::string::npos);
  }
  std::istringstream ragged("y1,z\n1,1\n2\n");
  CHECK_THROWS_AS(parse_numeric_csv(ragged), Error);
  std::istringstream bad("y1,z\n1,1\nabc,0\n");
  CHECK_THROWS_AS(parse_numeric_csv(bad), Error);

  std::istringstream paired("y1,z,pair\n1,1,7\n2,0,7\n3,0,2\n4,1,2\n");
  const ObservedStudy ps = study_from_table(parse_numeric_csv(paired));
  CHECK(ps.is_paired());
  CHECK(ps.pairs().size() == 2);

  std::ostringstream out;
  write_study_csv(out, s);
  std::istringstream back(out.str());
  const ObservedStudy r = study_from_table(parse_numeric_csv(back), 2);
  CHECK(r.outcomes() == s.outcomes());
  CHECK(r.covariates() == s.covariates());
  CHECK(r.assignment() == s.assignment());
}
