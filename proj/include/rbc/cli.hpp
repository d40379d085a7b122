#pragma once

namespace rbc {

/// Runs one CLI invocation. Returns 0 on success, 1 on failed table tolerance
/// or runtime error, 2 on usage or configuration errors.
int run_command(int argc, char** argv);

}  // namespace rbc
