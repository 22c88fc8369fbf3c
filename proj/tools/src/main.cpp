// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "reflectsim/cli.hpp"

int main(int argc, char** argv) { return reflectsim::cli::run(argc, argv, std::cout, std::cerr); }
