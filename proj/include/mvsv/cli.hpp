#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvsv {

/// Entry point of the `mvsv` tool. `args` excludes the program name. Returns the process
/// exit code: 0 on success, the ErrorCode value of a library error, 1 otherwise.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvsv
