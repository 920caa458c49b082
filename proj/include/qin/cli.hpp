#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qin {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // gradcheck failure or non-finite training
  kExitConfig = 2,
  kExitIo = 3,
  kExitSingleClass = 4,
};

/// Entry point behind the `qin` binary; `args` excludes the program name.
/// Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qin
