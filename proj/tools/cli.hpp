#pragma once

#include <ostream>

namespace rcsdid::cli {

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kEstimationFailure = 2;

// Parses argv and runs the `estimate`, `weights` or `simulate` subcommand.
// Results go to `out` (or the --out file), diagnostics to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rcsdid::cli
