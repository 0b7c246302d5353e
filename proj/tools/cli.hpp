#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace netnmf::cli {

/// Runs the command line tool. Returns the process exit code:
/// 0 on success, 1 on numerical failure, 2 on input errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netnmf::cli
