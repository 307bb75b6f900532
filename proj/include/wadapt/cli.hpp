#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace wadapt {

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitDivergence = 3;

/// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace wadapt
