#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace enertree::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kTraining = 3,
};

// Environment variable naming the output directory when -o is absent.
inline constexpr const char* kOutputEnv = "ENERTREE_OUTPUT_DIR";
inline constexpr const char* kDefaultOutput = "enertree-out";

// args excludes the program name. The one-line JSON summary goes to `out`,
// diagnostics and help to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace enertree::cli
