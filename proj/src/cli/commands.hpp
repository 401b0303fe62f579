#pragma once

#include <string>
#include <vector>

namespace hopwise::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitClient = 3 };

/// Runs the `hopwise` command line; `args[0]` is the program name.
int run(const std::vector<std::string>& args);

} // namespace hopwise::cli
