// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "prepivot/frt.hpp"
#include "prepivot/population.hpp"
#include "prepivot/rng.hpp"

namespace prepivot {

enum class Scenario { table1, table2, power };
enum class EffectKind { sharp, weak, constant, heterogeneous };

const char* to_string(Scenario s) noexcept;
const char* to_string(EffectKind e) noexcept;
Scenario scenario_from_name(const std::string& name);
EffectKind effect_from_name(const std::string& name);

struct ScenarioConfig {
  Scenario scenario = Scenario::table1;
  Index n = 1000;
  std::size_t sims = 500;
  std::size_t draws_omega = 500;
  std::size_t draws_gauss = 2000;
  double alpha = 0.05;
  EffectKind effect = EffectKind::weak;
  /// Effect size for constant / heterogeneous variants (every coordinate).
  double tau = 0.05;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  GaussMethod gauss_method = GaussMethod::automatic;
  /// Outcome dimension of the multivariate scenarios.
  Index dim = 25;
  /// Mahalanobis threshold of the rerandomized scenario.
  double balance_a = 1.0;
  /// Statistics to include (CLI names); empty selects the scenario default.
  std::vector<std::string> statistics;
  /// Set from another thread (e.g. a signal handler) to stop early; the
  /// result then covers the simulations that finished.
  const std::atomic<bool>* cancel = nullptr;
};

/// Default settings for a scenario (alpha and effect differ for power).
ScenarioConfig default_scenario_config(Scenario scenario);

nlohmann::ordered_json scenario_config_json(const ScenarioConfig& cfg);

struct MethodRate {
  std::string method;
  std::string setting;
  double rate = 0.0;
  double se = 0.0;
  std::size_t rejections = 0;
  std::size_t sims = 0;
};

struct ScenarioResult {
  std::vector<MethodRate> rates;
  /// p_values[m][s]: p-value of method m in simulation s (NaN if the
  /// simulation did not finish).
  std::vector<std::string> methods;
  std::vector<std::vector<double>> p_values;
  std::size_t completed = 0;
  bool interrupted = false;
  double mean_acceptance_rate = 1.0;
};

/// Covariates N(0, R) with R(1,2) = 0.8, R(1,3) = 0.2, R(2,3) = 0.3;
/// linear outcomes with shifted-exponential noise. Sharp or weak null.
FinitePopulation generate_table1_population(Index n, EffectKind effect, CounterRng& rng);

/// Equicorrelated Gaussian outcomes of dimension `dim` (correlation 0 for
/// r(1), 0.95 for r(0)); every effect variant is supported.
FinitePopulation generate_table2_population(Index n, EffectKind effect, double tau, Index dim, CounterRng& rng);

ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// method,setting,rate,se rows with a header.
std::string rates_to_csv(const ScenarioResult& result);
nlohmann::ordered_json scenario_result_json(const ScenarioConfig& cfg, const ScenarioResult& result);

}  // namespace prepivot
