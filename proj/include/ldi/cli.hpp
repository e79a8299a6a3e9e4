#pragma once

#include <string>
#include <vector>

namespace ldi {

// Parses and executes one command line (without the program name).
// Returns the process exit code: 0 success, 2 usage/config error,
// 3 solver failure, 4 data/fit failure.
int run_cli(const std::vector<std::string>& args);

} // namespace ldi
