#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace varsplit {

/// Command-line entry point. Subcommands: synthetic, data-property, scaling,
/// decompose. Returns 0 on success, 1 on any error, 2 when some experiment
/// cells failed to train (their failures are recorded in the outputs).
int run_cli(int argc, char** argv);

/// Same as above with explicit arguments (args excludes the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace varsplit
