#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace microclust::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericalError = 3;

// Parses "start:stop:step" or a comma-separated list. Throws
// std::invalid_argument on malformed or empty grids.
std::vector<double> parse_grid(const std::string& text);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace microclust::cli
