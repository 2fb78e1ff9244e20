#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rvlab {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitGateFailed = 3 };

/// `args` excludes the program name.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rvlab
