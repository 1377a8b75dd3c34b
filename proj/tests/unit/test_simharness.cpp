// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "oracles.hpp"
#include "prepivot/error.hpp"
#include "prepivot/simharness.hpp"

using namespace prepivot;

TEST_CASE("table1 scenario populations") {
  CounterRng rng(1, stream_id(StreamDomain::population, 0));
  const FinitePopulation weak = generate_table1_population(500, EffectKind::weak, rng);
  CHECK(weak.covariate_dim() == 3);
  CHECK(std::abs(weak.average_effect()[0]) < 1e-12);
  CHECK(weak.unit_effects().cwiseAbs().maxCoeff() > 0.1);
  const FinitePopulation sharp = generate_table1_population(500, EffectKind::sharp, rng);
  CHECK(sharp.unit_effects().cwiseAbs().maxCoeff() == 0.0);

  const Index n = 10000;
  const FinitePopulation big = generate_table1_population(n, EffectKind::weak, rng);
  const Matrix x = big.x().rowwise() - big.x().colwise().mean();
  const Matrix cov = x.transpose() * x / (n - 1.0);
  const Vector sd = cov.diagonal().cwiseSqrt();
  const double targets[3][3] = {{1, .8, .2}, {.8, 1, .3}, {.2, .3, 1}};
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double r = cov(i, j) / (sd[i] * sd[j]);
      const double rho = targets[i][j];
      CHECK(std::abs(r - rho) < 4 * (1 - rho * rho) / std::sqrt(static_cast<double>(n)));
    }
  }
}

TEST_CASE("table2 scenario populations") {
  CounterRng rng(2, stream_id(StreamDomain::population, 0));
  const FinitePopulation weak = generate_table2_population(300, EffectKind::weak, 0.05, 25, rng);
  CHECK(weak.outcome_dim() == 25);
  CHECK(weak.average_effect().cwiseAbs().maxCoeff() < 1e-12);
  const FinitePopulation constant = generate_table2_population(300, EffectKind::constant, 0.05, 25, rng);
  CHECK((constant.unit_effects().array() - 0.05).abs().maxCoeff() < 1e-12);
  const FinitePopulation het = generate_table2_population(300, EffectKind::heterogeneous, 0.05, 25, rng);
  CHECK((het.average_effect().array() - 0.05).abs().maxCoeff() < 1e-12);
}

TEST_CASE("scenario runs are reproducible and complete") {
  ScenarioConfig cfg = default_scenario_config(Scenario::table1);
  cfg.n = 60;
  cfg.sims = 8;
  cfg.draws_omega = 60;
  cfg.draws_gauss = 200;
  cfg.seed = 5;
  const ScenarioResult a = run_scenario(cfg);
  cfg.threads = 3;
  const ScenarioResult b = run_scenario(cfg);
  CHECK(a.completed == 8);
  CHECK_FALSE(a.interrupted);
  CHECK(a.methods == b.methods);
  CHECK(scenario_result_json(cfg, a).dump() == scenario_result_json(cfg, b).dump());
  CHECK(a.rates.size() == a.methods.size());
  for (const auto& r : a.rates) {
    CHECK(r.rate >= 0.0);
    CHECK(r.rate <= 1.0);
  }
  CHECK(a.mean_acceptance_rate > 0.05);
  CHECK(a.mean_acceptance_rate < 0.5);
  const std::string csv = rates_to_csv(a);
  CHECK(csv.rfind("method,setting,rate,se\n", 0) == 0);

  std::atomic<bool> stop{true};
  cfg.cancel = &stop;
  const ScenarioResult c = run_scenario(cfg);
  CHECK(c.interrupted);
  CHECK(c.completed < 8);

  ScenarioConfig t2 = default_scenario_config(Scenario::table2);
  CHECK(t2.n == 300);
  t2.n = 40;
  t2.dim = 3;
  t2.sims = 3;
  t2.draws_omega = 30;
  t2.draws_gauss = 200;
  const ScenarioResult d = run_scenario(t2);
  CHECK(d.completed == 3);
  CHECK(default_scenario_config(Scenario::power).alpha == 0.25);
  CHECK_THROWS_AS(scenario_from_name("table9"), Error);
}
