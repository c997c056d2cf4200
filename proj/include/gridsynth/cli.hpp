#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gridsynth::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kValidation = 3 };

/// `args` excludes the program name. Diagnostics go to stderr.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace gridsynth::cli
