#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qdw::cli {

inline constexpr const char* kVersion = "0.3.0";

/// Runs one command line. Exit codes: 0 success, 1 usage or validation error,
/// 2 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdw::cli
