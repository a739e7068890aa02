#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace layersparse {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,       // usage, parse, shape and validation errors
  kExitDivergence = 3,  // numeric divergence
  kExitSoundness = 4,   // sound condensation precondition failed
};

// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace layersparse
