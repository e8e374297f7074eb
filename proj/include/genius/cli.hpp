#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace genius::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitUsage = 64;

// Entry point of the `genius` tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace genius::cli
