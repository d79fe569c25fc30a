#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace convdiff {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitProcessing = 2;

/// Runs the command line front end. `args` excludes the program name.
/// Returns 0 on success, 1 on usage errors and 2 on processing errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace convdiff
