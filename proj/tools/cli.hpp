#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace vitcod::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;   // bad flags or argument values
inline constexpr int kExitIo = 3;      // unreadable, malformed or unsupported files
inline constexpr int kExitDomain = 4;  // invalid data, configs, divergence

// Runs the tool with argv-style arguments (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vitcod::cli
