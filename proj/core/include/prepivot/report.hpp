// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "prepivot/frt.hpp"

namespace prepivot {

/// Machine-readable report. Contains no timings or thread counts, so equal
/// inputs give byte-identical documents.
nlohmann::ordered_json report_to_json(const TestReport& report, bool include_reference_values = false);
nlohmann::ordered_json confidence_set_to_json(const ConfidenceSet& set);

/// Aligned plain-text table for terminals.
std::string format_table(const TestReport& report);
std::string format_table(const ConfidenceSet& set);

}  // namespace prepivot
