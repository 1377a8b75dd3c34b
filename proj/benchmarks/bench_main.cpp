// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "prepivot/covariance.hpp"
#include "prepivot/design.hpp"
#include "prepivot/frt.hpp"
#include "prepivot/prepivot.hpp"
#include "prepivot/rng.hpp"

namespace {

using namespace prepivot;

Matrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(gen);
  return m;
}

Assignment first_n1(Index n, Index n1) {
  Assignment w(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n1; ++i) w[static_cast<std::size_t>(i * n / n1)] = 1;
  return w;
}

void BM_Philox(benchmark::State& state) {
  CounterRng rng(1, 0);
  std::uint64_t acc = 0;
  for (auto _ : state) {
    for (int i = 0; i < 1024; ++i) acc ^= rng();
  }
  benchmark::DoNotOptimize(acc);
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_Philox);

void BM_NeymanCovariance(benchmark::State& state) {
  const Index n = state.range(0), d = state.range(1);
  const Matrix y = gaussian_matrix(n, d, 2);
  const Matrix x = gaussian_matrix(n, 3, 3);
  const Assignment w = first_n1(n, n / 5);
  for (auto _ : state) benchmark::DoNotOptimize(neyman_unpooled(y, x, w).v.data());
}
BENCHMARK(BM_NeymanCovariance)->Args({300, 25})->Args({1000, 1})->Args({5000, 25});

void BM_PushforwardMonteCarlo(benchmark::State& state) {
  const auto spec = StatisticSpec::from_name(state.range(0) == 0 ? "maxt" : "hotelling-pooled");
  const Index d = state.range(1);
  const Matrix a = gaussian_matrix(d, d, 4);
  CovEstimate v;
  v.v = a * a.transpose() + Matrix::Identity(d, d);
  v.tau_dim = d;
  Matrix pooled = v.v * 1.3;
  const Xi xi = compute_xi(spec, v, &pooled);
  GaussEngineConfig cfg;
  cfg.draws = 2000;
  cfg.method = GaussMethod::monte_carlo;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pushforward_cdf(v, spec, xi, BalanceCriterion::none(), 2.0, cfg).g);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.draws));
}
BENCHMARK(BM_PushforwardMonteCarlo)->Args({0, 3})->Args({0, 25})->Args({1, 25});

void BM_PushforwardRerandomized(benchmark::State& state) {
  const Matrix a = gaussian_matrix(4, 4, 5);
  CovEstimate v;
  v.v = a * a.transpose() + Matrix::Identity(4, 4);
  v.tau_dim = 1;
  v.delta_dim = 3;
  const auto spec = StatisticSpec::from_name("dim");
  const Xi xi = compute_xi(spec, v);
  const Matrix metric = state.range(0) ? Matrix(v.dd()) : Matrix(v.dd() * 1.01);
  const BalanceCriterion crit = BalanceCriterion::mahalanobis(1.0, metric);
  GaussEngineConfig cfg;
  cfg.draws = 2000;
  for (auto _ : state) benchmark::DoNotOptimize(pushforward_cdf(v, spec, xi, crit, 1.0, cfg).g);
}
BENCHMARK(BM_PushforwardRerandomized)->Arg(0)->Arg(1);

void BM_EnumerateCre(benchmark::State& state) {
  const AssignmentSpace space = AssignmentSpace::cre(state.range(0), state.range(0) / 2);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate(space).size());
}
BENCHMARK(BM_EnumerateCre)->Arg(12)->Arg(16);

void BM_SampledTest(benchmark::State& state) {
  const Index n = 300;
  const Matrix y = gaussian_matrix(n, 25, 6);
  const ObservedStudy s(y, first_n1(n, 60), Matrix(n, 0));
  FrtConfig cfg;
  cfg.draws_omega = 100;
  cfg.gauss.draws = 500;
  const auto spec = StatisticSpec::from_name(state.range(0) == 0 ? "hotelling" : "hotelling-pooled");
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        randomization_test(s, AssignmentSpace::cre(n, 60), EstimatorSpec::dim(), spec, cfg).analyses[0].p_value);
  }
}
BENCHMARK(BM_SampledTest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
