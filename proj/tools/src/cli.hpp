#pragma once

#include <iosfwd>

namespace sheetguard::tools {

enum ExitCode : int { kOk = 0, kFindings = 1, kUsage = 2 };

/// Runs one `sheetguard` invocation. `serve` blocks until the server stops.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sheetguard::tools
