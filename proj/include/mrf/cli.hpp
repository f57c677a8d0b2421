#pragma once

#include <string>
#include <vector>

namespace mrf::cli {

// Entry point for the mrfcli tool; args excludes the program name.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
int run(const std::vector<std::string>& args);

}  // namespace mrf::cli
