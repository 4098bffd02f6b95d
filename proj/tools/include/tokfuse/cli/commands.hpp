#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tokfuse::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitTransport = 3;

/// Entry point behind the `tokfuse` executable. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tokfuse::cli
