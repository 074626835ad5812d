// Subcommand dispatch for the `fddet` tool.
//
//   fddet [--config FILE] [--set key=value]... <subcommand> [options]
//
// Exit codes: 0 success, 1 validation error / divergence / bad usage,
// 2 I/O error.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fddet {

/// `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "1..15" (inclusive integer range) or "1,3,5".
std::vector<int> parse_int_values(const std::string& text);

}  // namespace fddet
