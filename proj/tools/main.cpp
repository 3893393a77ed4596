#include <iostream>

#include "circphase/cli.hpp"

int main(int argc, char** argv) { return circphase::run_subcommand(argc, argv, std::cout, std::cerr); }
