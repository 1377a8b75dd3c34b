// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "prepivot/covariance.hpp"
#include "prepivot/error.hpp"
#include "prepivot/estimator.hpp"

using namespace prepivot;

namespace {
Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}
}  // namespace

TEST_CASE("Neyman covariance estimator") {
  const Assignment w{1, 1, 0, 0};
  CHECK(neyman_unpooled(ObservedStudy(col({1, 2, 3, 4}), w, Matrix(4, 0)), w).v(0, 0) == doctest::Approx(2.0));
  CHECK(neyman_unpooled(ObservedStudy(col({1, 1, 3, 3}), w, Matrix(4, 0)), w).tt().norm() == 0.0);

  std::mt19937_64 gen(20);
  const Matrix y = oracle::random_matrix(gen, 11, 2);
  const Matrix x = oracle::random_matrix(gen, 11, 3);
  const Assignment ww = oracle::random_cre(gen, 11, 5);
  const CovEstimate v = neyman_unpooled(y, x, ww);
  CHECK(v.v.rows() == 5);
  CHECK(v.tau_dim == 2);
  CHECK(v.delta_dim == 3);
  // Diagonal entries agree with the scalar formula.
  Matrix both(11, 5);
  both << y, x;
  for (Index j = 0; j < 5; ++j) CHECK(v.v(j, j) == doctest::Approx(oracle::neyman(both.col(j), ww)).epsilon(1e-12));
  // The imbalance block is the Neyman estimate on x alone.
  CHECK((v.dd() - neyman_unpooled(x, Matrix(11, 0), ww).v).norm() < 1e-12);
  CHECK((v.v - v.v.transpose()).norm() == 0.0);
  CHECK_THROWS_AS(neyman_unpooled(y, x, Assignment{1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), Error);
}

TEST_CASE("pooled covariance estimator") {
  const Assignment w{1, 1, 0, 0};
  CHECK(pooled(ObservedStudy(col({1, 2, 3, 4}), w, Matrix(4, 0)), w)(0, 0) == doctest::Approx(2.0));
  std::mt19937_64 gen(21);
  const Matrix y = oracle::random_matrix(gen, 12, 3);
  const Assignment bal = oracle::random_cre(gen, 12, 6);
  CHECK((pooled(y, bal) - neyman_unpooled(y, Matrix(12, 0), bal).tt()).norm() < 1e-12);

  // Equal arm covariances: put the same centered rows in both arms.
  Matrix base = oracle::random_matrix(gen, 4, 2);
  base.rowwise() -= base.colwise().mean();
  Matrix stacked(8, 2);
  stacked << base.array() + 3.0, base.array() - 1.0;
  const Assignment half{1, 1, 1, 1, 0, 0, 0, 0};
  const Matrix s = base.transpose() * base / 3.0;
  CHECK((pooled(stacked, half) - (8.0 / 4 + 8.0 / 4) * s).norm() < 1e-12);
}

TEST_CASE("regression residual variance") {
  std::mt19937_64 gen(22);
  const Matrix x = oracle::random_matrix(gen, 14, 2);
  const Assignment w = oracle::random_cre(gen, 14, 7);
  Vector exact(14);
  for (Index i = 0; i < 14; ++i) exact[i] = w[i] ? 1 + x(i, 0) - 2 * x(i, 1) : -3 + 0.5 * x(i, 1);
  CHECK(regression_residual(ObservedStudy(exact, w, x), w) < 1e-20);

  const Vector y = x.col(0) + oracle::random_matrix(gen, 14, 1);
  const ObservedStudy s(y, w, x);
  // Oracle: residuals from the two arm-wise OLS fits, then the scalar
  // Neyman formula on them.
  Vector resid(14);
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<Index> idx;
    for (Index i = 0; i < 14; ++i)
      if (w[i] == arm) idx.push_back(i);
    Matrix d(static_cast<Index>(idx.size()), 3);
    Vector yy(static_cast<Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
      d(r, 0) = 1;
      d.row(r).tail(2) = x.row(idx[r]);
      yy[r] = y[idx[r]];
    }
    const Vector beta = oracle::ols(d, yy);
    const Vector e = yy - d * beta;
    for (std::size_t r = 0; r < idx.size(); ++r) resid[idx[r]] = e[r];
  }
  CHECK(regression_residual(s, w) == doctest::Approx(oracle::neyman(resid, w)).epsilon(1e-10));

  const ObservedStudy nocov(y, w, Matrix(14, 0));
  CHECK(regression_residual(nocov, w) == doctest::Approx(neyman_unpooled(nocov, w).v(0, 0)).epsilon(1e-12));
}

TEST_CASE("paired variance") {
  const std::vector<UnitPair> pairs{{{0, 1}}, {{2, 3}}};
  const ObservedStudy s(col({2, 1, 3, 6}), {1, 0, 0, 1}, Matrix(4, 0), 2, pairs);
  CHECK(paired_neyman(s, s.assignment()) == doctest::Approx(2.0));
  const ObservedStudy same(col({2, 1, 6, 5}), {1, 0, 1, 0}, Matrix(4, 0), 2, pairs);
  CHECK(paired_neyman(same, same.assignment()) == 0.0);
  std::mt19937_64 gen(23);
  const Matrix y = oracle::random_matrix(gen, 10, 1);
  std::vector<UnitPair> p5, r5;
  for (Index i = 0; i < 5; ++i) p5.push_back({2 * i, 2 * i + 1});
  r5 = p5;
  std::reverse(r5.begin(), r5.end());
  const Assignment w{1, 0, 0, 1, 1, 0, 0, 1, 1, 0};
  CHECK(paired_neyman(y, p5, w)(0, 0) == doctest::Approx(paired_neyman(y, r5, w)(0, 0)).epsilon(1e-13));
}

TEST_CASE("multi-arm contrast covariance") {
  std::mt19937_64 gen(24);
  Matrix c2(2, 1);
  c2 << -1, 1;
  const Matrix y = oracle::random_matrix(gen, 12, 2);
  const Assignment w = oracle::random_cre(gen, 12, 5);
  CHECK((multiarm_contrast(y, w, c2) - neyman_unpooled(y, Matrix(12, 0), w).tt()).norm() < 1e-12);

  // Dense oracle: V = (C' kron I_d) D (C kron I_d), D = blockdiag((N/n_a) S_a).
  const Index d = 2, arms = 3, n = 15;
  const Matrix yy = oracle::random_matrix(gen, n, d);
  Assignment w3(n);
  for (Index i = 0; i < n; ++i) w3[i] = static_cast<std::uint8_t>(i % arms);
  std::shuffle(w3.begin(), w3.end(), gen);
  Matrix c(arms, 2);
  c << -1, 0, 1, -1, 0, 1;
  Matrix dmat = Matrix::Zero(arms * d, arms * d);
  for (Index a = 0; a < arms; ++a) {
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i)
      if (w3[i] == a) idx.push_back(i);
    Matrix rows(static_cast<Index>(idx.size()), d);
    for (std::size_t r = 0; r < idx.size(); ++r) rows.row(r) = yy.row(idx[r]);
    rows.rowwise() -= rows.colwise().mean();
    dmat.block(a * d, a * d, d, d) = static_cast<double>(n) / idx.size() * rows.transpose() * rows / (idx.size() - 1.0);
  }
  Matrix kron = Matrix::Zero(arms * d, c.cols() * d);
  for (Index a = 0; a < arms; ++a)
    for (Index j = 0; j < c.cols(); ++j) kron.block(a * d, j * d, d, d) = c(a, j) * Matrix::Identity(d, d);
  const Matrix expected = kron.transpose() * dmat * kron;
  CHECK((multiarm_contrast(yy, w3, c) - expected).norm() < 1e-11);

  // An arm with no within-arm variation contributes nothing.
  Matrix flat = yy;
  for (Index i = 0; i < n; ++i)
    if (w3[i] == 1) flat.row(i).setConstant(2.0);
  Matrix c_mid(arms, 1);
  c_mid << -1, 1, 0;
  const Matrix with_mid = multiarm_contrast(flat, w3, c_mid);
  CHECK(with_mid.isApprox(dmat.block(0, 0, d, d), 1e-12));
}

TEST_CASE("positive-definite repair") {
  Matrix v(2, 2);
  v << 1, 1, 1, 1;
  const Repaired r = repair_pd(v);
  CHECK(r.repaired);
  CHECK(r.v.llt().info() == Eigen::Success);
  CHECK((r.factor * r.factor.transpose() - r.v).norm() < 1e-12);
  std::mt19937_64 gen(25);
  const Matrix pd = oracle::random_spd(gen, 4);
  const Repaired ok = repair_pd(pd);
  CHECK_FALSE(ok.repaired);
  CHECK(ok.v == pd);
  CHECK((ok.factor * ok.factor.transpose() - pd).norm() < 1e-12);
}
