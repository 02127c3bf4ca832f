#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fadkit {

/// Prefix of every error line written by the command-line tool.
inline constexpr const char* kErrorPrefix = "fadkit-error: ";

/// Runs the `fadkit` command line with `args` (program name excluded).
/// Reports go to `out`, errors to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fadkit
