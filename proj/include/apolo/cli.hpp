#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace apolo::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kBackendError = 2,
  kRunFailure = 3,
};

/// Entry point shared by the `apolo` binary and the tests. `args` excludes
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace apolo::cli
