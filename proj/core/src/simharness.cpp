// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/simharness.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <Eigen/Cholesky>

#include "prepivot/error.hpp"
#include "prepivot/parallel.hpp"

namespace prepivot {

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::table1: return "table1";
    case Scenario::table2: return "table2";
    case Scenario::power: return "power";
  }
  return "unknown";
}

const char* to_string(EffectKind e) noexcept {
  switch (e) {
    case EffectKind::sharp: return "sharp";
    case EffectKind::weak: return "weak";
    case EffectKind::constant: return "constant";
    case EffectKind::heterogeneous: return "heterogeneous";
  }
  return "unknown";
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "table1") return Scenario::table1;
  if (name == "table2") return Scenario::table2;
  if (name == "power") return Scenario::power;
  fail(ErrorKind::invalid_argument, "unknown scenario '" + name + "' (expected table1, table2, power)");
}

EffectKind effect_from_name(const std::string& name) {
  if (name == "sharp") return EffectKind::sharp;
  if (name == "weak") return EffectKind::weak;
  if (name == "constant") return EffectKind::constant;
  if (name == "heterogeneous") return EffectKind::heterogeneous;
  fail(ErrorKind::invalid_argument,
       "unknown effect '" + name + "' (expected sharp, weak, constant, heterogeneous)");
}

ScenarioConfig default_scenario_config(Scenario scenario) {
  ScenarioConfig cfg;
  cfg.scenario = scenario;
  switch (scenario) {
    case Scenario::table1:
      cfg.n = 1000;
      break;
    case Scenario::table2:
      cfg.n = 300;
      break;
    case Scenario::power:
      cfg.n = 300;
      cfg.alpha = 0.25;
      cfg.effect = EffectKind::constant;
      break;
  }
  return cfg;
}

nlohmann::ordered_json scenario_config_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(cfg.scenario);
  j["n"] = cfg.n;
  j["sims"] = cfg.sims;
  j["draws_omega"] = cfg.draws_omega;
  j["draws_gauss"] = cfg.draws_gauss;
  j["alpha"] = cfg.alpha;
  j["effect"] = to_string(cfg.effect);
  j["tau"] = cfg.tau;
  j["seed"] = cfg.seed;
  j["gauss_method"] = to_string(cfg.gauss_method);
  if (cfg.scenario == Scenario::table1) {
    j["balance_a"] = cfg.balance_a;
  } else {
    j["dim"] = cfg.dim;
  }
  j["statistics"] = cfg.statistics;
  return j;
}

FinitePopulation generate_table1_population(Index n, EffectKind effect, CounterRng& rng) {
  require(n >= 10, ErrorKind::invalid_argument, "table1 population needs N >= 10");
  require(effect == EffectKind::sharp || effect == EffectKind::weak, ErrorKind::invalid_argument,
          "table1 supports the sharp and weak variants only");
  Matrix r(3, 3);
  r << 1.0, 0.8, 0.2, 0.8, 1.0, 0.3, 0.2, 0.3, 1.0;
  const Matrix l = Eigen::LLT<Matrix>(r).matrixL();
  Vector beta0(3), beta1(3);
  beta0 << -6.4, 4.0, 2.4;
  beta1 << 0.2, 0.4, 0.6;
  boost::random::normal_distribution<double> normal;
  boost::random::exponential_distribution<double> exp1(1.0);
  boost::random::exponential_distribution<double> exp10(0.1);

  Matrix x(n, 3);
  Vector r0(n), r1(n);
  Vector z(3);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < 3; ++j) z[j] = normal(rng);
    x.row(i) = (l * z).transpose();
    const double e0 = -exp1(rng) + 1.0;
    const double e1 = -exp10(rng) + 10.0;
    r0[i] = x.row(i).dot(beta0) + e0;
    r1[i] = x.row(i).dot(beta1) + e1;
  }
  Matrix y1 = r1;
  Matrix y0 = r1;
  if (effect == EffectKind::weak) y0 = (r0.array() + (r1.mean() - r0.mean())).matrix();
  return FinitePopulation(std::move(y1), std::move(y0), std::move(x));
}

FinitePopulation generate_table2_population(Index n, EffectKind effect, double tau, Index dim, CounterRng& rng) {
  require(n >= 10, ErrorKind::invalid_argument, "table2 population needs N >= 10");
  require(dim >= 1, ErrorKind::invalid_argument, "outcome dimension must be positive");
  constexpr double rho0 = 0.95;
  boost::random::normal_distribution<double> normal;
  Matrix r1(n, dim), r0(n, dim);
  const double common = std::sqrt(rho0);
  const double own = std::sqrt(1.0 - rho0);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < dim; ++j) r1(i, j) = normal(rng);
    const double g = normal(rng);
    for (Index j = 0; j < dim; ++j) r0(i, j) = common * g + own * normal(rng);
  }
  const Eigen::RowVectorXd shift = r1.colwise().mean() - r0.colwise().mean();
  Matrix y1, y0;
  switch (effect) {
    case EffectKind::sharp:
      y1 = r1;
      y0 = r1;
      break;
    case EffectKind::weak:
      y1 = r1;
      y0 = r0.rowwise() + shift;
      break;
    case EffectKind::constant:
      y0 = r1;
      y1 = r1.array() + tau;
      break;
    case EffectKind::heterogeneous:
      y1 = r1;
      y0 = (r0.rowwise() + shift).array() - tau;
      break;
  }
  return FinitePopulation(std::move(y1), std::move(y0), Matrix(n, 0));
}

namespace {

struct Battery {
  std::vector<Analysis> analyses;
  std::vector<std::string> methods;
  // For every method: index into the analyses and whether it reads the
  // large-sample p-value of that analysis.
  std::vector<std::pair<std::size_t, bool>> source;
};

Battery make_battery(const ScenarioConfig& cfg) {
  std::vector<std::string> stats = cfg.statistics;
  if (stats.empty()) {
    stats = cfg.scenario == Scenario::table1 ? std::vector<std::string>{"dim", "student"}
                                             : std::vector<std::string>{"hotelling", "hotelling-pooled", "maxt"};
  }
  Battery b;
  for (const auto& s : stats) {
    const StatisticSpec spec = StatisticSpec::from_name(s);
    b.analyses.push_back({"frt-" + s, spec, false});
    b.methods.push_back("frt-" + s);
    b.source.emplace_back(b.analyses.size() - 1, false);
    // In the rerandomized scenario prepivoting the studentized and the
    // plain difference in means coincide, so only dim is prepivoted.
    if (cfg.scenario == Scenario::table1 && s == "student") continue;
    b.analyses.push_back({"pre-" + s, spec, true});
    b.methods.push_back("pre-" + s);
    b.source.emplace_back(b.analyses.size() - 1, false);
    b.methods.push_back("ls-" + s);
    b.source.emplace_back(b.analyses.size() - 1, true);
  }
  return b;
}

std::string setting_label(const ScenarioConfig& cfg) {
  std::ostringstream s;
  std::string effect = to_string(cfg.effect);
  effect[0] = static_cast<char>(std::toupper(effect[0]));
  s << effect << ", N=" << cfg.n;
  return s.str();
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  require(cfg.sims >= 1, ErrorKind::invalid_argument, "sims must be at least 1");
  require(cfg.alpha > 0.0 && cfg.alpha < 1.0, ErrorKind::invalid_argument, "alpha must lie in (0, 1)");
  const Battery battery = make_battery(cfg);
  const std::size_t n_methods = battery.methods.size();
  const Index n1 = static_cast<Index>(std::llround(0.2 * static_cast<double>(cfg.n)));

  ScenarioResult result;
  result.methods = battery.methods;
  result.p_values.assign(n_methods, std::vector<double>(cfg.sims, std::numeric_limits<double>::quiet_NaN()));
  std::vector<std::uint8_t> done(cfg.sims, 0);
  std::vector<double> acceptance(cfg.sims, 1.0);

  parallel_for(cfg.sims, cfg.threads, [&](std::size_t s) {
    if (cfg.cancel && cfg.cancel->load()) return;
    const std::uint64_t sim_seed = mix_seed(cfg.seed, s);
    CounterRng pop_rng(sim_seed, stream_id(StreamDomain::population, 0));
    const FinitePopulation pop = cfg.scenario == Scenario::table1
                                     ? generate_table1_population(cfg.n, cfg.effect, pop_rng)
                                     : generate_table2_population(cfg.n, cfg.effect, cfg.tau, cfg.dim, pop_rng);
    const AssignmentSpace space =
        cfg.scenario == Scenario::table1
            ? AssignmentSpace::rerandomized(pop.x(), n1,
                                            BalanceCriterion::mahalanobis(cfg.balance_a, design_metric(pop.x(), n1)))
            : AssignmentSpace::cre(cfg.n, n1);
    SamplingOptions observed_opts;
    observed_opts.domain = StreamDomain::observed;
    const Assignment z = sample_uniform(space, 1, sim_seed, observed_opts).draws[0];
    const ObservedStudy study = observe(pop, z);

    FrtConfig frt;
    frt.mode = ReferenceMode::sampled;
    frt.draws_omega = cfg.draws_omega;
    frt.gauss.draws = cfg.draws_gauss;
    frt.gauss.method = cfg.gauss_method;
    frt.seed = sim_seed;
    frt.threads = 1;
    frt.alpha = cfg.alpha;
    frt.keep_reference = false;
    const RandomizationEngine engine(space, frt);
    const TestReport report = engine.run(study, EstimatorSpec::dim(), battery.analyses);
    for (std::size_t m = 0; m < n_methods; ++m) {
      const auto& ar = report.analyses[battery.source[m].first];
      result.p_values[m][s] = battery.source[m].second ? ar.large_sample_p : ar.p_value;
    }
    acceptance[s] = report.acceptance_rate;
    done[s] = 1;
  });

  for (std::size_t s = 0; s < cfg.sims; ++s) result.completed += done[s];
  result.interrupted = result.completed < cfg.sims;
  double acc = 0.0;
  for (std::size_t s = 0; s < cfg.sims; ++s) acc += done[s] ? acceptance[s] : 0.0;
  result.mean_acceptance_rate = result.completed ? acc / static_cast<double>(result.completed) : 0.0;

  const std::string setting = setting_label(cfg);
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodRate r;
    r.method = battery.methods[m];
    r.setting = setting;
    r.sims = result.completed;
    for (std::size_t s = 0; s < cfg.sims; ++s) {
      if (done[s] && result.p_values[m][s] <= cfg.alpha) ++r.rejections;
    }
    if (r.sims > 0) {
      r.rate = static_cast<double>(r.rejections) / static_cast<double>(r.sims);
      r.se = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(r.sims));
    }
    result.rates.push_back(r);
  }
  return result;
}

std::string rates_to_csv(const ScenarioResult& result) {
  std::ostringstream out;
  out << "method,setting,rate,se\n";
  char buf[64];
  for (const auto& r : result.rates) {
    out << r.method << ",\"" << r.setting << "\",";
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.rate, r.se);
    out << buf << '\n';
  }
  return out.str();
}

nlohmann::ordered_json scenario_result_json(const ScenarioConfig& cfg, const ScenarioResult& result) {
  nlohmann::ordered_json j;
  j["config"] = scenario_config_json(cfg);
  j["completed"] = result.completed;
  j["interrupted"] = result.interrupted;
  j["mean_acceptance_rate"] = result.mean_acceptance_rate;
  auto& rates = j["rates"] = nlohmann::ordered_json::array();
  for (const auto& r : result.rates) {
    rates.push_back({{"method", r.method},
                     {"setting", r.setting},
                     {"rate", r.rate},
                     {"se", r.se},
                     {"rejections", r.rejections},
                     {"sims", r.sims}});
  }
  return j;
}

}  // namespace prepivot
