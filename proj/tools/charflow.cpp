#include "charflow/cli/app.hpp"

int main(int argc, char** argv) { return charflow::cli::run_subcommand(argc, argv); }
