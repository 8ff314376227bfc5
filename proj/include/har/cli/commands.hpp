// SPDX-License-Identifier: Apache-2.0
/**
 * @file   commands.hpp
 * @brief  `har` command-line entry point.
 *
 * Commands: ingest, dfd, augment, synth, train, eval, ablate, gradcheck,
 * report. Exit codes: 0 success, 1 validation/input error, 2 runtime or
 * numerical fault (a failing gradient check included).
 */
#pragma once

#include <exception>
#include <iosfwd>
#include <string>

namespace har::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Maps an exception to an exit code.
int exit_code_for(const std::exception& e);

/// Parses arguments and runs one command; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Two-panel SVG (loss; train/val accuracy) from a curves CSV as written by
/// `har train`.
std::string curves_svg(const std::string& csv);

}  // namespace har::cli
