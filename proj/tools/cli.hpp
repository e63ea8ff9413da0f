#pragma once

#include <string>
#include <vector>

namespace edrep::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kValidation = 2,
  kNumeric = 3,
};

/// Parses argv (argv[0] is the program name), runs one subcommand and maps
/// errors to exit codes. Diagnostics go to stderr.
int run(int argc, const char* const* argv);

/// Convenience overload for tests: args excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace edrep::cli
