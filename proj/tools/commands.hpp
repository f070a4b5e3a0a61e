#pragma once

#include <ostream>

namespace pct::app {

enum ExitCode : int { ok = 0, validation_error = 1, runtime_failure = 2 };

/// Full command-line entry point; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pct::app
