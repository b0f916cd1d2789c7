#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace protoexplain::cli {

/// Runs one invocation. `args` excludes the program name. Returns the exit
/// code: 0 success, 1 internal error, 2 usage or configuration error,
/// 3 calibration did not converge.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace protoexplain::cli
