#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "manifoldshap/core.hpp"

namespace manifoldshap {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitConfig = 2,
  kExitAcceptance = 3,
};

/// Runs the tool on argv-style arguments (args[0] is the program name).
/// stdout gets one summary line per command; diagnostics go to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Nearest-neighbour lookup table: grid rows are inputs, target is f.
Model MakeTabulatedModel(Dataset grid);

}  // namespace manifoldshap
