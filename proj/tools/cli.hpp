#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nbreg::cli {

enum ExitCode : int { kOk = 0, kValidationError = 1, kNumericError = 2 };

/// Runs one command line. args[0] is the program name. Reports go to `out`
/// (or --output), usage and error text to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nbreg::cli
