#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace asyncell {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  exit_ok = 0,
  exit_verification_failed = 1,
  exit_bad_arguments = 2,
  exit_io_error = 3,
};

/// Entry point of the `asyncell` tool: simulate, predict, verify, bench.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with the arguments after the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asyncell
