#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace varlens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args[0] is the program name). Reports go to
/// `out`; usage text and the one-line "error: <category>: ..." go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace varlens::cli
