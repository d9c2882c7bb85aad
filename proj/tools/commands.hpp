#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kge::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;  // run-time error or failed internal check
inline constexpr int kUsage = 2;    // bad arguments or unreadable input

// Entry point shared by the executable and the tests. Machine-readable output
// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kge::cli
