#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ipw::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kRuntimeError = 3 };

/// Parses `args` (without the program name) and runs the selected subcommand.
/// Diagnostics go to `err`, short status lines to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ipw::cli
