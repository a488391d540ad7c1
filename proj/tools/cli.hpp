#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace anchorpose::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;  // bad flags, config, or input files

/**
 * Runs the tool on `args` (without the program name). Reports go to files
 * under --out; the primary report is echoed to `out` in the --format format
 * and diagnostics are written to `err` as one key=value line per error.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anchorpose::cli
