#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace specden::cli {

/// Runs one CLI invocation (args exclude the program name). Returns the
/// process exit code: 0 success, 2 invalid input, 3 numeric failure,
/// 4 resource limit.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace specden::cli
