#pragma once

namespace ggc {

/// Runs the command-line front end. Returns 0 on success, 1 on usage errors,
/// 2 on data errors and 3 on numerical failures.
int cli_dispatch(int argc, char** argv);

} // namespace ggc
