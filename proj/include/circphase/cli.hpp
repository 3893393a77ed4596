#pragma once

#include <iosfwd>

namespace circphase {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitDataError = 2;

/// Runs one subcommand (`simulate`, `preprocess`, `fit-cosinor`, `features`, `train`, `evaluate`, `sweep`,
/// `ablate`, `case-study`). Diagnostics and logs go to `err`; data products go under the configured output
/// directory.
int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace circphase
