// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "prepivot/population.hpp"

namespace prepivot {

struct NumericTable {
  std::vector<std::string> header;
  Matrix values;
};

/// Comma-separated numeric table with a mandatory header row. Empty cells
/// and unparsable numbers are rejected with the offending row and column.
NumericTable parse_numeric_csv(std::istream& in, const std::string& source = "<stream>");
NumericTable read_numeric_csv(const std::string& path);

struct StudyColumns {
  std::vector<std::string> outcomes;
  std::vector<std::string> covariates;
  bool has_pairs = false;
};

/// Builds an ObservedStudy from columns y1..yd, z, x1..xk and optionally
/// `pair` (units sharing a pair id form a pair). Columns are matched by
/// name; any order is accepted. A missing `z` or `y1` column raises a
/// schema error. arm_count 0 infers the number of arms from the labels.
ObservedStudy study_from_table(const NumericTable& table, int arm_count = 0,
                               StudyColumns* columns = nullptr);
ObservedStudy read_study_csv(const std::string& path, int arm_count = 0,
                             StudyColumns* columns = nullptr);

/// Writes the observed study in the same layout read_study_csv accepts.
void write_study_csv(std::ostream& out, const ObservedStudy& study);

}  // namespace prepivot
