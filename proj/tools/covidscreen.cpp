// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <iostream>

#include "respira/cli.hpp"

int main(int argc, char** argv) {
  return respira::cli::Run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
