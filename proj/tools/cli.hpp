#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tonemap::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kMissingFile = 3,
  kConfig = 4,
  kFormat = 5,
  kNumeric = 6,
};

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tonemap::cli
