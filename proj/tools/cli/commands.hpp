#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace apfx::cli {

enum ExitCode : int { ok = 0, config_error = 1, numerical_flag = 2, property_violation = 3 };

// Full command line without the program name, e.g. {"solve", "--config", "x.json"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace apfx::cli
