#pragma once

namespace fraudfuse {

// Command-line entry point (generate / train / evaluate / explain / compare).
// Returns the process exit code: 0 on success, 1 on runtime or data errors,
// 2 on usage or configuration errors.
int run_cli(int argc, char** argv);

}  // namespace fraudfuse
