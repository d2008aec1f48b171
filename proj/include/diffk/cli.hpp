#pragma once

#include <ostream>

namespace diffk {

/// Entry point of the diffk tool: run_cli({"diffk", verb, flags...}).
/// Returns 0 on success, 1 on a domain error (including a malformed
/// workspace or a failing verify suite) and 2 on a usage error.
int run_cli(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

}  // namespace diffk
