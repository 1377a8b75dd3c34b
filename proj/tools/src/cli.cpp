// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot_cli/cli.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prepivot/covariance.hpp"
#include "prepivot/csv.hpp"
#include "prepivot/design.hpp"
#include "prepivot/error.hpp"
#include "prepivot/frt.hpp"
#include "prepivot/parallel.hpp"
#include "prepivot/report.hpp"
#include "prepivot/simharness.hpp"

namespace prepivot::cli {
namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

/// Every user-facing setting. Threads and output paths do not influence
/// results and are kept out of the echoed config.
struct RunConfig {
  // test / ci
  std::string data;
  std::string design = "cre";
  std::string statistic = "dim";
  std::string adjust = "none";
  std::string mode = "sampled";
  std::size_t draws_omega = 1000;
  std::size_t draws_gauss = 10000;
  std::string gauss_method = "auto";
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string contrasts;
  bool raw = false;
  std::string shift;
  double balance_a = 1.0;
  std::string balance_metric = "estimated";
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  std::uint64_t max_attempts = kDefaultMaxAttempts;
  bool reference_values = false;
  std::string grid;
  // simulate
  std::string scenario = "table1";
  Index n = 0;
  std::size_t sims = 500;
  std::string effect;
  double tau = 0.05;
  Index dim = 25;
  std::string statistics;
  // enumerate
  Index n1 = 0;
  Index pairs = 0;
  std::string arm_sizes;
  bool list = false;
  // execution only
  unsigned threads = 0;
  std::string out;
  std::string config;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string("cannot parse ") + what + " entry '" + item + "'");
    }
  }
  return out;
}

json echo_test_config(const RunConfig& c, const std::string& command) {
  json j;
  j["command"] = command;
  j["data"] = c.data;
  j["design"] = c.design;
  j["statistic"] = c.statistic;
  j["adjust"] = c.adjust;
  j["mode"] = c.mode;
  j["draws_omega"] = c.draws_omega;
  j["draws_gauss"] = c.draws_gauss;
  j["gauss_method"] = c.gauss_method;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  j["raw"] = c.raw;
  if (!c.contrasts.empty()) j["contrasts"] = c.contrasts;
  if (!c.shift.empty()) j["shift"] = c.shift;
  if (c.design == "rerand") {
    j["balance"] = {{"kind", "mahalanobis"}, {"a", c.balance_a}, {"metric", c.balance_metric}};
  }
  j["enumeration_cap"] = c.enumeration_cap;
  j["max_attempts"] = c.max_attempts;
  j["reference_values"] = c.reference_values;
  if (command == "ci") j["grid"] = c.grid;
  return j;
}

// Reads the keys echo_test_config writes (directly or under "config").
void apply_json(RunConfig& c, json j) {
  if (j.contains("config") && j["config"].is_object()) j = j["config"];
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("data", c.data);
  get("design", c.design);
  get("statistic", c.statistic);
  get("adjust", c.adjust);
  get("mode", c.mode);
  get("draws_omega", c.draws_omega);
  get("draws_gauss", c.draws_gauss);
  get("gauss_method", c.gauss_method);
  get("alpha", c.alpha);
  get("seed", c.seed);
  get("raw", c.raw);
  get("contrasts", c.contrasts);
  get("shift", c.shift);
  get("enumeration_cap", c.enumeration_cap);
  get("max_attempts", c.max_attempts);
  get("reference_values", c.reference_values);
  get("grid", c.grid);
  if (j.contains("balance")) {
    const json& b = j["balance"];
    if (b.contains("kind")) {
      const auto kind = b["kind"].get<std::string>();
      if (kind != "mahalanobis") throw UsageError("balance.kind must be 'mahalanobis'");
      if (c.design == "cre") c.design = "rerand";
    }
    if (b.contains("a")) b["a"].get_to(c.balance_a);
    if (b.contains("metric")) b["metric"].get_to(c.balance_metric);
  }
}

// Registers an option that writes into `parsed`, and remembers how to copy
// it into the effective config once a config file has been applied.
class Binder {
 public:
  Binder(RunConfig& parsed, RunConfig& effective, std::vector<std::function<void()>>& copies)
      : parsed_(parsed), effective_(effective), copies_(copies) {}

  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& name, T RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_option(name, parsed_.*field, help);
    copies_.push_back([this, opt, field] {
      if (opt->count() > 0) effective_.*field = parsed_.*field;
    });
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& name, bool RunConfig::*field, const std::string& help) {
    CLI::Option* opt = app->add_flag(name, parsed_.*field, help);
    copies_.push_back([this, opt, field] {
      if (opt->count() > 0) effective_.*field = parsed_.*field;
    });
    return opt;
  }

 private:
  RunConfig& parsed_;
  RunConfig& effective_;
  std::vector<std::function<void()>>& copies_;
};

void add_test_options(CLI::App* app, Binder& b) {
  b.option(app, "--data", &RunConfig::data, "study CSV (columns y1..yd, z, x1..xk, optional pair)");
  b.option(app, "--design", &RunConfig::design, "cre | rerand | paired | multiarm")
      ->check(CLI::IsMember({"cre", "rerand", "paired", "multiarm"}));
  b.option(app, "--statistic", &RunConfig::statistic, "dim | student | hotelling | hotelling-pooled | maxt | l2")
      ->check(CLI::IsMember({"dim", "student", "hotelling", "hotelling-pooled", "maxt", "l2"}));
  b.option(app, "--adjust", &RunConfig::adjust, "none | lin")->check(CLI::IsMember({"none", "lin"}));
  b.option(app, "--mode", &RunConfig::mode, "exact | sampled")->check(CLI::IsMember({"exact", "sampled"}));
  b.option(app, "--draws-omega", &RunConfig::draws_omega, "assignment draws in sampled mode");
  b.option(app, "--draws-gauss", &RunConfig::draws_gauss, "Gaussian Monte Carlo draws");
  b.option(app, "--gauss-method", &RunConfig::gauss_method, "auto | mc | closed")
      ->check(CLI::IsMember({"auto", "mc", "closed"}));
  b.option(app, "--alpha", &RunConfig::alpha, "test level");
  b.option(app, "--seed", &RunConfig::seed, "master seed");
  b.option(app, "--contrasts", &RunConfig::contrasts, "contrast CSV (one row per arm) for multiarm designs");
  b.flag(app, "--raw", &RunConfig::raw, "also run the test on the raw statistic");
  b.option(app, "--shift", &RunConfig::shift, "hypothesized constant effect c (comma-separated, one per outcome)");
  b.option(app, "--balance-a", &RunConfig::balance_a, "Mahalanobis threshold for rerand");
  b.option(app, "--balance-metric", &RunConfig::balance_metric, "estimated | design")
      ->check(CLI::IsMember({"estimated", "design"}));
  b.option(app, "--enumeration-cap", &RunConfig::enumeration_cap, "largest space enumerated in exact mode");
  b.option(app, "--max-attempts", &RunConfig::max_attempts, "rejection-sampling attempts per draw");
  b.flag(app, "--reference-values", &RunConfig::reference_values, "include every reference value in the JSON");
  b.option(app, "--threads", &RunConfig::threads, "worker threads (0 = all cores); results do not depend on it");
  b.option(app, "--out", &RunConfig::out, "write the JSON report here");
  b.option(app, "--config", &RunConfig::config, "JSON config (or a previous report) to replay; flags override it");
}

struct Prepared {
  ObservedStudy study;
  AssignmentSpace space;
  EstimatorSpec estimator;
  std::vector<Analysis> analyses;
  FrtConfig frt;
  Vector shift;
};

Prepared prepare_test(const RunConfig& c) {
  if (c.data.empty()) throw UsageError("--data is required");
  const bool multiarm = c.design == "multiarm";
  ObservedStudy study = read_study_csv(c.data, multiarm ? 0 : 2);
  if (c.design == "paired" && !study.is_paired()) {
    std::vector<UnitPair> pairs;
    require(study.n_units() % 2 == 0, ErrorKind::invalid_design,
            "paired design without a pair column needs an even number of rows");
    for (Index p = 0; p < study.n_units() / 2; ++p) pairs.push_back({2 * p, 2 * p + 1});
    study = ObservedStudy(study.outcomes(), study.assignment(), study.covariates(), 2, std::move(pairs));
  }

  std::optional<AssignmentSpace> space;
  if (c.design == "cre") {
    space = AssignmentSpace::cre(study.n_units(), study.arm_sizes()[1]);
  } else if (c.design == "rerand") {
    require(study.covariate_dim() > 0, ErrorKind::invalid_design, "rerand design needs covariate columns x1..xk");
    const Matrix metric = c.balance_metric == "design"
                              ? design_metric(study.covariates(), study.arm_sizes()[1])
                              : Matrix(neyman_unpooled(study.covariates(), Matrix(study.n_units(), 0),
                                                       study.assignment()).v);
    space = AssignmentSpace::rerandomized(study.covariates(), study.arm_sizes()[1],
                                          BalanceCriterion::mahalanobis(c.balance_a, metric));
  } else if (c.design == "paired") {
    space = AssignmentSpace::paired(study.pairs());
  } else {
    space = AssignmentSpace::multiarm(study.arm_sizes());
  }

  EstimatorSpec estimator = EstimatorSpec::dim();
  if (c.design == "paired") {
    estimator = EstimatorSpec::paired();
  } else if (multiarm) {
    if (c.contrasts.empty()) throw UsageError("--contrasts is required for multiarm designs");
    const NumericTable t = read_numeric_csv(c.contrasts);
    validate_contrasts(t.values, study.arm_count());
    estimator = EstimatorSpec::contrast(t.values);
  }
  if (c.adjust == "lin") {
    if (c.design == "paired" || multiarm) throw UsageError("--adjust lin needs a cre or rerand design");
    estimator = EstimatorSpec::lin_adjusted();
  }

  std::vector<Analysis> analyses;
  const StatisticSpec spec = StatisticSpec::from_name(c.statistic);
  analyses.push_back({"prepivoted", spec, true});
  if (c.raw) analyses.push_back({"raw", spec, false});

  FrtConfig frt;
  frt.mode = c.mode == "exact" ? ReferenceMode::exact : ReferenceMode::sampled;
  frt.draws_omega = c.draws_omega;
  frt.gauss.draws = c.draws_gauss;
  frt.gauss.method = c.gauss_method == "mc"       ? GaussMethod::monte_carlo
                     : c.gauss_method == "closed" ? GaussMethod::closed_form
                                                  : GaussMethod::automatic;
  frt.seed = c.seed;
  frt.threads = c.threads == 0 ? default_threads() : c.threads;
  frt.enumeration_cap = c.enumeration_cap;
  frt.max_attempts = c.max_attempts;
  frt.alpha = c.alpha;
  frt.keep_reference = true;

  Vector shift;
  if (!c.shift.empty()) {
    const auto v = parse_doubles(c.shift, "--shift");
    if (static_cast<Index>(v.size()) != study.outcome_dim()) {
      throw UsageError("--shift needs one value per outcome column");
    }
    shift = Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
  }
  return {std::move(study), std::move(*space), std::move(estimator), std::move(analyses), frt, shift};
}

json study_json(const ObservedStudy& s) {
  return {{"n_units", s.n_units()},
          {"outcome_dim", s.outcome_dim()},
          {"covariate_dim", s.covariate_dim()},
          {"arm_sizes", s.arm_sizes()},
          {"pairs", s.pairs().size()}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::io, "cannot write " + path);
  f << j.dump(2) << '\n';
}

int run_test(const RunConfig& c, std::ostream& out) {
  const Prepared p = prepare_test(c);
  const RandomizationEngine engine(p.space, p.frt);
  const TestReport report = engine.run(p.study, p.estimator, p.analyses, p.shift);
  json j;
  j["tool"] = "prepivot";
  j["version"] = kVersion;
  j["config"] = echo_test_config(c, "test");
  j["study"] = study_json(p.study);
  j["design"] = to_string(p.space.kind());
  j["estimator"] = to_string(p.estimator.kind);
  j["report"] = report_to_json(report, c.reference_values);
  if (!c.out.empty()) write_json(c.out, j);
  out << format_table(report);
  return kSuccess;
}

int run_ci(const RunConfig& c, std::ostream& out) {
  if (c.grid.empty()) throw UsageError("--grid lo:hi:step is required");
  const auto parts = split_list(c.grid, ':');
  if (parts.size() != 3) throw UsageError("--grid must look like lo:hi:step");
  const auto lo = parse_doubles(parts[0], "--grid");
  const auto hi = parse_doubles(parts[1], "--grid");
  const auto step = parse_doubles(parts[2], "--grid");
  if (!c.shift.empty()) throw UsageError("--shift is not used by ci; the grid supplies the shifts");
  const Prepared p = prepare_test(c);
  const std::vector<double> grid = make_grid(lo.at(0), hi.at(0), step.at(0));
  const ConfidenceSet set = confidence_set(p.study, p.space, p.estimator, p.analyses.front(), p.frt, grid);
  json j;
  j["tool"] = "prepivot";
  j["version"] = kVersion;
  j["config"] = echo_test_config(c, "ci");
  j["study"] = study_json(p.study);
  j["confidence_set"] = confidence_set_to_json(set);
  if (!c.out.empty()) write_json(c.out, j);
  out << format_table(set);
  return kSuccess;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

int run_simulate(const RunConfig& c, std::ostream& out) {
  ScenarioConfig cfg = default_scenario_config(scenario_from_name(c.scenario));
  if (c.n > 0) cfg.n = c.n;
  cfg.sims = c.sims;
  cfg.draws_omega = c.draws_omega;
  cfg.draws_gauss = c.draws_gauss;
  if (c.alpha > 0) cfg.alpha = c.alpha;
  if (!c.effect.empty()) cfg.effect = effect_from_name(c.effect);
  cfg.tau = c.tau;
  cfg.seed = c.seed;
  cfg.dim = c.dim;
  cfg.balance_a = c.balance_a;
  cfg.statistics = split_list(c.statistics);
  cfg.gauss_method = c.gauss_method == "mc"       ? GaussMethod::monte_carlo
                     : c.gauss_method == "closed" ? GaussMethod::closed_form
                                                  : GaussMethod::automatic;
  cfg.threads = c.threads == 0 ? default_threads() : c.threads;
  g_interrupted.store(false);
  cfg.cancel = &g_interrupted;
  const auto previous = std::signal(SIGINT, on_interrupt);
  ScenarioResult result;
  try {
    result = run_scenario(cfg);
  } catch (...) {
    std::signal(SIGINT, previous);
    throw;
  }
  std::signal(SIGINT, previous);

  const std::filesystem::path dir = c.out.empty() ? std::filesystem::path(".") : std::filesystem::path(c.out);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "rates.csv", std::ios::binary);
    require(f.good(), ErrorKind::io, "cannot write " + (dir / "rates.csv").string());
    f << rates_to_csv(result);
  }
  json config = scenario_config_json(cfg);
  config["tool"] = "prepivot";
  config["version"] = kVersion;
  write_json((dir / "config.json").string(), config);
  write_json((dir / "results.json").string(), scenario_result_json(cfg, result));

  char line[160];
  std::snprintf(line, sizeof line, "%-24s %-22s %8s %8s\n", "method", "setting", "rate", "se");
  out << line;
  for (const auto& r : result.rates) {
    std::snprintf(line, sizeof line, "%-24s %-22s %8.4f %8.4f\n", r.method.c_str(), r.setting.c_str(), r.rate, r.se);
    out << line;
  }
  out << result.completed << " of " << cfg.sims << " simulations";
  if (cfg.scenario == Scenario::table1) out << "; mean acceptance rate " << result.mean_acceptance_rate;
  out << '\n';
  if (result.interrupted) out << "interrupted: partial results written\n";
  return kSuccess;
}

int run_enumerate(const RunConfig& c, std::ostream& out) {
  std::optional<AssignmentSpace> space;
  if (c.design == "cre") {
    if (c.n <= 0) throw UsageError("--n is required for cre");
    space = AssignmentSpace::cre(c.n, c.n1);
  } else if (c.design == "paired") {
    if (c.pairs <= 0) throw UsageError("--pairs is required for paired");
    space = AssignmentSpace::paired_consecutive(c.pairs);
  } else if (c.design == "multiarm") {
    std::vector<Index> sizes;
    for (double v : parse_doubles(c.arm_sizes, "--arm-sizes")) sizes.push_back(static_cast<Index>(v));
    space = AssignmentSpace::multiarm(sizes);
  } else {
    RunConfig t = c;
    const Prepared p = prepare_test(t);
    space = p.space;
  }
  if (!c.list && space->kind() != DesignKind::rerandomized) {
    const std::uint64_t card = space->super_cardinality();
    if (card == std::numeric_limits<std::uint64_t>::max()) {
      out << ">= " << card << '\n';
    } else {
      out << card << '\n';
    }
    return kSuccess;
  }
  const auto all = enumerate(*space, c.enumeration_cap);
  if (c.list) {
    for (const auto& w : all) {
      for (auto z : w) out << static_cast<int>(z);
      out << '\n';
    }
  } else {
    out << all.size() << '\n';
  }
  return kSuccess;
}

void error_json(std::ostream& err, const std::string& kind, const std::string& message) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  err << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomization tests with Gaussian prepivoting", "prepivot"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  RunConfig parsed;
  RunConfig effective;
  std::vector<std::function<void()>> copies;
  Binder b(parsed, effective, copies);

  CLI::App* test = app.add_subcommand("test", "run a randomization test");
  add_test_options(test, b);
  CLI::App* ci = app.add_subcommand("ci", "confidence set by test inversion");
  add_test_options(ci, b);
  b.option(ci, "--grid", &RunConfig::grid, "lo:hi:step");

  CLI::App* sim = app.add_subcommand("simulate", "reproduce a simulation table");
  b.option(sim, "--scenario", &RunConfig::scenario, "table1 | table2 | power")
      ->check(CLI::IsMember({"table1", "table2", "power"}));
  b.option(sim, "--n", &RunConfig::n, "units per population");
  b.option(sim, "--sims", &RunConfig::sims, "number of simulated experiments");
  b.option(sim, "--alpha", &RunConfig::alpha, "test level (scenario default when omitted)");
  b.option(sim, "--seed", &RunConfig::seed, "master seed");
  b.option(sim, "--effect", &RunConfig::effect, "sharp | weak | constant | heterogeneous")
      ->check(CLI::IsMember({"sharp", "weak", "constant", "heterogeneous"}));
  b.option(sim, "--tau", &RunConfig::tau, "effect size for constant / heterogeneous");
  b.option(sim, "--draws-omega", &RunConfig::draws_omega, "assignment draws per experiment");
  b.option(sim, "--draws-gauss", &RunConfig::draws_gauss, "Gaussian draws per assignment");
  b.option(sim, "--gauss-method", &RunConfig::gauss_method, "auto | mc | closed")
      ->check(CLI::IsMember({"auto", "mc", "closed"}));
  b.option(sim, "--dim", &RunConfig::dim, "outcome dimension (table2, power)");
  b.option(sim, "--balance-a", &RunConfig::balance_a, "Mahalanobis threshold (table1)");
  b.option(sim, "--statistics", &RunConfig::statistics, "comma-separated statistic names");
  b.option(sim, "--threads", &RunConfig::threads, "worker threads (0 = all cores)");
  b.option(sim, "--out", &RunConfig::out, "output directory");

  CLI::App* en = app.add_subcommand("enumerate", "count (or list) the assignment space");
  b.option(en, "--design", &RunConfig::design, "cre | rerand | paired | multiarm")
      ->check(CLI::IsMember({"cre", "rerand", "paired", "multiarm"}));
  b.option(en, "--n", &RunConfig::n, "units (cre)");
  b.option(en, "--n1", &RunConfig::n1, "treated units (cre)");
  b.option(en, "--pairs", &RunConfig::pairs, "number of pairs (paired)");
  b.option(en, "--arm-sizes", &RunConfig::arm_sizes, "comma-separated arm sizes (multiarm)");
  b.option(en, "--data", &RunConfig::data, "study CSV (rerand)");
  b.option(en, "--balance-a", &RunConfig::balance_a, "Mahalanobis threshold (rerand)");
  b.option(en, "--balance-metric", &RunConfig::balance_metric, "estimated | design");
  b.option(en, "--enumeration-cap", &RunConfig::enumeration_cap, "largest space enumerated");
  b.flag(en, "--list", &RunConfig::list, "print every assignment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kSuccess : kUsage;
  }

  try {
    if (sim->parsed()) {
      effective.alpha = 0.0;  // 0 selects the scenario default
      effective.draws_omega = 500;
      effective.draws_gauss = 2000;
    }
    if (!parsed.config.empty()) {
      std::ifstream f(parsed.config);
      if (!f.good()) throw UsageError("cannot open config " + parsed.config);
      json j;
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        throw UsageError("config " + parsed.config + " is not valid JSON: " + e.what());
      }
      apply_json(effective, j);
    }
    for (auto& copy : copies) copy();

    if (test->parsed()) return run_test(effective, out);
    if (ci->parsed()) return run_ci(effective, out);
    if (sim->parsed()) return run_simulate(effective, out);
    return run_enumerate(effective, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    error_json(err, "usage", e.what());
    return kUsage;
  } catch (const Error& e) {
    const bool usage = e.kind() == ErrorKind::schema || e.kind() == ErrorKind::invalid_argument;
    if (usage) err << "error: " << e.what() << '\n';
    error_json(err, std::string(to_string(e.kind())), e.what());
    return usage ? kUsage : kDataError;
  } catch (const json::exception& e) {
    error_json(err, "config", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    error_json(err, "internal", e.what());
    return kDataError;
  }
}

}  // namespace prepivot::cli
