// SPDX-License-Identifier: Apache-2.0

#include <har/cli/commands.hpp>

#include <iostream>

int main(int argc, char** argv) { return har::cli::run_cli(argc, argv, std::cout, std::cerr); }
