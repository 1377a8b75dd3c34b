// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "prepivot/csv.hpp"
#include "prepivot_cli/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "prepivot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = prepivot::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "prepivot_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path write_study(const std::string& name, prepivot::Index n, prepivot::Index d, prepivot::Index k,
                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const prepivot::ObservedStudy s(oracle::random_matrix(gen, n, d), oracle::random_cre(gen, n, n / 2),
                                  oracle::random_matrix(gen, n, k));
  const fs::path p = scratch() / name;
  std::ofstream f(p);
  prepivot::write_study_csv(f, s);
  return p;
}

}  // namespace

TEST_CASE("enumerate prints the cardinality") {
  const Run r = cli({"enumerate", "--design", "cre", "--n", "6", "--n1", "3"});
  CHECK(r.code == 0);
  CHECK(r.out == "20\n");
  CHECK(cli({"enumerate", "--design", "paired", "--pairs", "3"}).out == "8\n");
  CHECK(cli({"enumerate", "--design", "multiarm", "--arm-sizes", "2,2,2"}).out == "90\n");
  const Run listed = cli({"enumerate", "--design", "cre", "--n", "4", "--n1", "2", "--list"});
  CHECK(std::count(listed.out.begin(), listed.out.end(), '\n') == 6);
}

TEST_CASE("exact Hotelling test produces a JSON report") {
  const fs::path data = write_study("n12.csv", 12, 2, 0, 1);
  const fs::path out = scratch() / "n12.json";
  const Run r = cli({"test", "--data", data.string(), "--design", "cre", "--statistic", "hotelling", "--mode",
                     "exact", "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("prepivoted") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(out));
  const double p = j["report"]["analyses"][0]["p_value"];
  CHECK(p > 0.0);
  CHECK(p <= 1.0);
  CHECK(j["report"]["reference_size"] == 924);
  CHECK_FALSE(j["config"].contains("threads"));
}

TEST_CASE("usage and data errors map to exit codes") {
  const fs::path noz = scratch() / "noz.csv";
  std::ofstream(noz) << "y1,x1\n1,2\n3,4\n";
  const Run missing = cli({"test", "--data", noz.string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("'z'") != std::string::npos);
  CHECK(cli({"test", "--data", noz.string(), "--mode", "bogus"}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"test"}).code == 1);

  const Run absent = cli({"test", "--data", (scratch() / "absent.csv").string()});
  CHECK(absent.code == 2);
  const auto j = nlohmann::json::parse(absent.err);
  CHECK(j["error"]["kind"] == "io");

  const fs::path big = write_study("big.csv", 60, 1, 0, 2);
  const Run too_large = cli({"test", "--data", big.string(), "--mode", "exact"});
  CHECK(too_large.code == 2);
  CHECK(nlohmann::json::parse(too_large.err)["error"]["kind"] == "too_large");
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("replaying the echoed config reproduces the report") {
  const fs::path data = write_study("replay.csv", 30, 3, 2, 3);
  const fs::path first = scratch() / "first.json";
  const fs::path second = scratch() / "second.json";
  REQUIRE(cli({"test", "--data", data.string(), "--statistic", "maxt", "--adjust", "lin", "--draws-omega", "80",
               "--draws-gauss", "300", "--seed", "9", "--raw", "--out", first.string()})
              .code == 0);
  REQUIRE(cli({"test", "--config", first.string(), "--out", second.string()}).code == 0);
  CHECK(slurp(first) == slurp(second));
  // Explicit flags override the file.
  const fs::path third = scratch() / "third.json";
  REQUIRE(cli({"test", "--config", first.string(), "--seed", "10", "--out", third.string()}).code == 0);
  CHECK(nlohmann::json::parse(slurp(third))["config"]["seed"] == 10);
  CHECK(nlohmann::json::parse(slurp(third))["config"]["statistic"] == "maxt");
}

TEST_CASE("results do not depend on the thread count") {
  const fs::path data = write_study("threads.csv", 40, 2, 0, 4);
  const fs::path a = scratch() / "t1.json";
  const fs::path b = scratch() / "t4.json";
  for (const auto& [threads, path] : {std::pair{"1", a}, std::pair{"4", b}}) {
    REQUIRE(cli({"test", "--data", data.string(), "--statistic", "maxt", "--draws-omega", "60", "--draws-gauss",
                 "200", "--threads", threads, "--out", path.string()})
                .code == 0);
  }
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("confidence-set subcommand") {
  const fs::path data = write_study("ci.csv", 10, 1, 0, 5);
  const fs::path out = scratch() / "ci.json";
  const Run r = cli({"ci", "--data", data.string(), "--statistic", "student", "--mode", "exact", "--grid",
                     "-3:3:0.5", "--alpha", "0.1", "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["confidence_set"]["grid"].size() == 13);
  CHECK(cli({"ci", "--data", data.string(), "--grid", "1:2"}).code == 1);
}
