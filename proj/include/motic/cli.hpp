#pragma once

#include <string>
#include <vector>

namespace motic {

// Full command-line surface; argv without the program name. Returns the
// process exit code. Usage errors report on stderr and exit nonzero.
int run_cli(const std::vector<std::string>& args);

}  // namespace motic
