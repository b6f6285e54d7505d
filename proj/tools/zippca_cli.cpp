#include <iostream>

#include "zippca/cli.hpp"

int main(int argc, char** argv) { return zippca::run_cli(argc, argv, std::cout, std::cerr); }
