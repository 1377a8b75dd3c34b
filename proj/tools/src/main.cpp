// Copyright 2026 The prepivot Authors.
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "prepivot_cli/cli.hpp"

int main(int argc, char** argv) { return prepivot::cli::run(argc, argv, std::cout, std::cerr); }
