#include "cli.hpp"

int main(int argc, char** argv) { return lqg::cli::run_command(argc, argv); }
