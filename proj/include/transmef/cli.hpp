#pragma once

#include <iosfwd>

namespace transmef {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumeric = 3,
};

/// Subcommands: train, fuse, eval, corrupt, fourier-demo.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace transmef
