#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace anchorloc {

// Exit codes of the command-line front end.
constexpr int kExitOk = 0;
constexpr int kExitHardError = 1;
constexpr int kExitSoftFailure = 2;

// Runs `anchorloc <args...>` with the localize, synth, eval and ablate
// subcommands; args excludes the program name. Results go to `out`,
// diagnostics to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace anchorloc
