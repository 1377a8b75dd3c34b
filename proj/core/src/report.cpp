// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include "prepivot/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace prepivot {
namespace {

nlohmann::ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return nullptr;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(sorted.size() - 1, lo + 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "-";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

nlohmann::ordered_json report_to_json(const TestReport& report, bool include_reference_values) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(report.mode);
  j["p_value_rule"] = report.mode == ReferenceMode::exact ? "count(g_w >= g_z) / |Omega|"
                                                          : "(1 + count(g_w >= g_z)) / (B + 1)";
  j["alpha"] = report.alpha;
  j["seed"] = report.seed;
  j["reference_size"] = report.reference_size;
  j["draws_omega"] = report.draws_omega;
  j["draws_gauss"] = report.draws_gauss;
  j["gauss_method"] = to_string(report.gauss_method);
  j["shift"] = std::vector<double>(report.shift.data(), report.shift.data() + report.shift.size());
  auto& analyses = j["analyses"] = nlohmann::ordered_json::array();
  for (const auto& a : report.analyses) {
    nlohmann::ordered_json aj;
    aj["name"] = a.name;
    aj["family"] = to_string(a.statistic.family);
    aj["xi_recipe"] = to_string(a.statistic.recipe);
    aj["prepivoted"] = a.prepivoted;
    aj["statistic_observed"] = number_or_null(a.statistic_observed);
    if (a.prepivoted) {
      aj["g_observed"] = number_or_null(a.g_observed);
      aj["large_sample_p"] = number_or_null(a.large_sample_p);
      aj["route"] = to_string(a.route);
      aj["mc_std_error"] = a.mc_std_error;
      aj["denominator_estimate"] = a.denominator_estimate;
      aj["repaired_count"] = a.repaired_count;
    }
    aj["p_value"] = a.p_value;
    aj["reject"] = a.reject;
    aj["count_ge"] = a.count_ge;
    const std::vector<double> sorted = a.reference.sorted();
    nlohmann::ordered_json ref;
    ref["mode"] = to_string(a.reference.mode);
    ref["size"] = report.reference_size;
    ref["includes_observed"] = a.reference.includes_observed;
    ref["ordering"] = a.prepivoted && a.route != GaussRoute::monte_carlo &&
                              a.route != GaussRoute::monte_carlo_truncated
                          ? "closed-form argument"
                          : (a.prepivoted ? "g" : "statistic");
    if (!sorted.empty()) {
      ref["min"] = number_or_null(sorted.front());
      ref["q25"] = number_or_null(quantile(sorted, 0.25));
      ref["median"] = number_or_null(quantile(sorted, 0.5));
      ref["q75"] = number_or_null(quantile(sorted, 0.75));
      ref["max"] = number_or_null(sorted.back());
    }
    if (include_reference_values) {
      auto& vals = ref["values"] = nlohmann::ordered_json::array();
      for (double v : a.reference.values) vals.push_back(number_or_null(v));
    }
    aj["reference"] = std::move(ref);
    analyses.push_back(std::move(aj));
  }
  nlohmann::ordered_json diag;
  diag["assignment_attempts"] = report.attempts;
  diag["acceptance_rate"] = report.acceptance_rate;
  if (report.mode == ReferenceMode::exact) diag["observed_position"] = report.observed_position;
  diag["warnings"] = report.warnings;
  j["diagnostics"] = std::move(diag);
  return j;
}

nlohmann::ordered_json confidence_set_to_json(const ConfidenceSet& set) {
  nlohmann::ordered_json j;
  j["accepted"] = set.accepted;
  j["is_interval"] = set.is_interval;
  if (!set.accepted.empty()) {
    j["lower"] = set.lower;
    j["upper"] = set.upper;
  }
  auto& pts = j["grid"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < set.grid.size(); ++i) {
    pts.push_back({{"c", set.grid[i]}, {"p_value", set.p_values[i]}});
  }
  j["warnings"] = set.warnings;
  return j;
}

std::string format_table(const TestReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-10s %12s %10s %10s %10s %7s\n", "analysis", "route", "statistic",
                "g_obs", "p_value", "LS_p", "reject");
  out << line;
  for (const auto& a : report.analyses) {
    std::snprintf(line, sizeof line, "%-18s %-10s %12s %10s %10s %10s %7s\n", a.name.c_str(),
                  a.prepivoted ? (a.route == GaussRoute::closed_normal       ? "normal"
                                  : a.route == GaussRoute::closed_chi_square ? "chisq"
                                                                             : "mc")
                               : "raw",
                  fixed(a.statistic_observed).c_str(), a.prepivoted ? fixed(a.g_observed).c_str() : "-",
                  fixed(a.p_value).c_str(), a.prepivoted ? fixed(a.large_sample_p).c_str() : "-",
                  a.reject ? "yes" : "no");
    out << line;
  }
  out << "mode=" << to_string(report.mode) << " reference=" << report.reference_size
      << " alpha=" << report.alpha << " seed=" << report.seed << '\n';
  for (const auto& w : report.warnings) out << "warning: " << w << '\n';
  return out.str();
}

std::string format_table(const ConfidenceSet& set) {
  std::ostringstream out;
  out << "accepted " << set.accepted.size() << " of " << set.grid.size() << " grid points";
  if (!set.accepted.empty()) {
    out << "; hull [" << set.lower << ", " << set.upper << "]" << (set.is_interval ? " (interval)" : " (not an interval)");
  }
  out << '\n';
  for (const auto& w : set.warnings) out << "warning: " << w << '\n';
  return out.str();
}

}  // namespace prepivot
