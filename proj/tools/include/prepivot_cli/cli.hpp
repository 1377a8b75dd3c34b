// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace prepivot::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2 };

/// Entry point shared by the executable and in-process tests. Human output
/// goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prepivot::cli
