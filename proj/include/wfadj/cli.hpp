#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wfadj::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kNoEvaluable = 3,
};

/// Runs the command line `args` (args[0] is the program name). Never throws;
/// every failure maps onto an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wfadj::cli
