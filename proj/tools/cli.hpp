#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace convhawkes::cli {

// Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs one command line (without the program name).
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace convhawkes::cli
