#pragma once

#include <string>
#include <vector>

namespace thz {

/// Entry point behind the command line tool. `args` excludes the
/// program name. Returns 0 on success, 2 on configuration errors, 3 on
/// runtime failures.
int run_cli(std::vector<std::string> args);

}  // namespace thz
