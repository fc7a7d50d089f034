#include "deepmatch/cli/commands.hpp"

int main(int argc, char** argv) { return deepmatch::cli::run_cli(argc, argv); }
