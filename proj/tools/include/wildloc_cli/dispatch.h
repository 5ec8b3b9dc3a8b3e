#pragma once

#include <ostream>

namespace wildloc::cli {

// Runs one subcommand. Returns 0 on success, 1 after printing
// `error: <kind>: <detail>` to `err`, 2 on usage errors.
int Dispatch(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err);

}  // namespace wildloc::cli
