#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace damseg::cli {

enum ExitCode : int {
    kSuccess = 0,
    kRuntimeFailure = 1,
    kUsageError = 2,
};

/// Runs one subcommand (capacity, gradcheck, train, ablate, census).
/// `args` excludes the program name. CSV results go to `out` unless --out is
/// given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace damseg::cli
