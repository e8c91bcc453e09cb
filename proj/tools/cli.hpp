#ifndef PIPKIT_TOOLS_CLI_HPP
#define PIPKIT_TOOLS_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace pipkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitEstimationFailed = 3;

inline constexpr unsigned long long kDefaultSeed = 20220101ULL;

/// Entry point of the `pipkit` tool. `args` excludes the program name.
/// Machine output goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pipkit::cli

#endif  // PIPKIT_TOOLS_CLI_HPP
