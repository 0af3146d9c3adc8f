// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace respira::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one `covidscreen` invocation. `args` excludes the program name.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace respira::cli
