#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irrnn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// Runs the irrnn command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irrnn::cli
