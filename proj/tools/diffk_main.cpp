#include <iostream>

#include "diffk/cli.hpp"

int main(int argc, char** argv) { return diffk::run_cli(argc, argv, std::cout, std::cerr); }
