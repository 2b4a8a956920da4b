#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ternkit::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kInputError = 2,
  kUsageError = 3,
};

// Runs one command line (args[0] is the subcommand). Machine-readable
// output goes to `out` as JSON lines, human-readable tables to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ternkit::cli
