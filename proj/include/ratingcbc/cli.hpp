#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ratingcbc {

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 for I/O, 3 for validation and 4 for numerical failures.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ratingcbc
