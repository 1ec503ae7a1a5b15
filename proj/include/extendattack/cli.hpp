#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace extendattack::cli {

/// Exit statuses shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kProcessingError = 1,
  kConfigError = 2,
  kAttackDetected = 3,
  kSuspicious = 4,
};

/// Entry point of the `extendattack` tool. Reads stdin when a subcommand is
/// given no input file.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

/// Convenience overload: args excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace extendattack::cli
