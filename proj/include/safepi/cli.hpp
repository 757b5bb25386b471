#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace safepi {

enum ExitCode : int {
    kExitOk = 0,
    kExitMalformedInput = 2,
    kExitInvariantViolation = 3,
    kExitInfeasible = 4,
    kExitVerifyFailed = 5,
};

/// Runs one command line (args[0] is the program name). Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace safepi
