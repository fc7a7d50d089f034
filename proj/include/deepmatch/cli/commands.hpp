#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deepmatch::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,    // bad flags, schema or precondition errors
    kExitNumeric = 2,  // solver failure or non-finite result
    kExitSuite = 3,    // a verify suite failed
};

/// Runs one subcommand (balance | estimate | distance | experiment | verify).
/// `args` excludes the program name. Results go to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace deepmatch::cli
