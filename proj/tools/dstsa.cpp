#include <iostream>

#include "dstsa/cli/commands.hpp"

int main(int argc, char** argv) { return dstsa::cli::run_cli(argc, argv, std::cout, std::cerr); }
