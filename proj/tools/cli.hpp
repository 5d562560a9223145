#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace bodycomp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitInvalidInvocation = 2;

/// Runs the `bodycomp` command line. `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bodycomp::cli
