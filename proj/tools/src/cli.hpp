#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bdiff::cli {

enum ExitCode : int { kOk = 0, kInvalid = 1, kNumerical = 2 };

/// Runs one invocation. args excludes the program name. Reports go to `out`,
/// usage and diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int dispatch(int argc, char** argv);

}  // namespace bdiff::cli
