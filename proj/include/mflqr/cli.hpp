#pragma once

#include <iosfwd>

namespace mflqr {

// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitValidation = 2,
  kExitNumerical = 3,
};

// Entry point of the `mflqr` tool. Regular output goes to `out`; every
// failure writes one JSON diagnostic line to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace mflqr
