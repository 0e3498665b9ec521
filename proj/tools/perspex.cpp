// Copyright 2026 The perspex Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "perspex/cli.hpp"

int main(int argc, char** argv) {
  return perspex::cli::run(argc, argv, std::cout, std::cerr);
}
