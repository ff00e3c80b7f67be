#pragma once

#include <string>
#include <vector>

namespace hyperqubit {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

/// Entry point of the `hyperqubit` tool. args[0] is the program name.
int run_cli(const std::vector<std::string>& args);

/// Reads HYPERQUBIT_LOG (trace, debug, info, warn, error, off) and configures the stderr logger.
void configure_logging();

}  // namespace hyperqubit
