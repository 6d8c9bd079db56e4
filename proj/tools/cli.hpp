#pragma once

#include <iosfwd>

namespace dkg::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kDivergence = 3,
};

/// Parses and runs one subcommand. Reports go to `out`, diagnostics to
/// `err`; the return value is the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dkg::cli
