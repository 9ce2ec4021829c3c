#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pano::cli {

enum ExitCode : int { ok = 0, runtime_failure = 1, usage = 2, partial_build = 3 };

/// Runs one CLI invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pano::cli
