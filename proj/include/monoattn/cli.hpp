#pragma once

#include <string>
#include <vector>

namespace monoattn {

// Command-line entry point. Exit codes: 0 success, 1 operational error,
// 2 verification failure (oracle/gradient check above tolerance), 64 usage.
int runCli(const std::vector<std::string>& args);

}  // namespace monoattn
