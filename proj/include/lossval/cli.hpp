#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lossval {

/// Runs the command line. `args` excludes the program name.
/// Returns 0 on success, 1 on runtime failure, 2 on usage or config errors.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lossval
