#pragma once

namespace charflow::cli {

/// Entry point of the charflow tool: parses argv (argv[0] is the program
/// name), runs one subcommand and writes its manifest.
/// Exit codes: 0 success, 1 numeric failure or failed check, 2 config error.
int run_subcommand(int argc, const char* const* argv);

}  // namespace charflow::cli
