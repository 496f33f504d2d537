#include <iostream>

#include "g3d/cli.hpp"

int main(int argc, char** argv) { return g3d::run_cli(argc, argv, std::cout, std::cerr); }
