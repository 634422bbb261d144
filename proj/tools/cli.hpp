#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace etf {

/// Runs one command line (without the program name). Exit codes: 0 success,
/// 1 a check reported violations or a computation failed, 2 usage or config
/// errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace etf
