#include <iostream>

#include "vdsa/cli.hpp"

int main(int argc, char** argv) { return vdsa::cli::main(argc, argv, std::cout, std::cerr); }
