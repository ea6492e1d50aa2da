#pragma once

namespace hemopt {

// The batch entry point behind the `hemopt` binary. Returns the process exit
// code: 0 on success, 2 for invalid inputs, 3 for infeasible instances, 1
// for internal failures.
int run_cli(int argc, const char* const* argv);

} // namespace hemopt
