#pragma once

#include <string>
#include <vector>

namespace latte {

/// Runs one CLI invocation (argv without the program name). Exit status:
/// 0 success, 1 validation error, 2 runtime failure. Diagnostics go to
/// stderr as a single line prefixed "error:".
int run_cli(const std::vector<std::string>& args);

}  // namespace latte
