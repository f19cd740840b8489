#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tagtrain {

// Runs the command line given argv-style arguments (without the program
// name). Returns the process exit code; 0 iff the requested artifact was
// fully written. Output streams are injected so tests can capture them.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tagtrain
