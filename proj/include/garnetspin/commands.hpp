#pragma once

// Command-line front end shared by the executable and the tests.

#include <iosfwd>

namespace garnetspin {

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_input = 2, exit_numerical = 3 };

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace garnetspin
