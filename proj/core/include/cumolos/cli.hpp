#pragma once

#include <string>
#include <vector>

namespace cumolos::cli {

/// Entry point behind the `cumolos` executable. `args` excludes the program
/// name. Exit codes: 0 success, 2 config error, 3 data error, 4 numeric
/// abort.
int run(const std::vector<std::string>& args);

}  // namespace cumolos::cli
