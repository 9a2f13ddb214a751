#pragma once

#include <string>
#include <vector>

namespace cabfare::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kIoError = 3;

// argv[0] is the program name. Data goes to stdout, logs to stderr.
int run(const std::vector<std::string>& argv);

}  // namespace cabfare::cli
