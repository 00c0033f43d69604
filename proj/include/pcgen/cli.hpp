#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pcgen::cli {

/// Dispatches one CLI invocation. `args` excludes the program name.
/// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pcgen::cli
