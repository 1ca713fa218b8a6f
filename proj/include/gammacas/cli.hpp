#pragma once

#include <string>
#include <vector>

namespace gammacas::cli {

/// Runs one CLI invocation; args exclude the program name. Exit codes:
/// 0 success, 1 usage, 2 data error, 3 numeric failure.
int run_cli(const std::vector<std::string>& args);

}  // namespace gammacas::cli
