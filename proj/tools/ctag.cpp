#include <iostream>

#include "ctag/cli.hpp"

int main(int argc, char** argv) { return ctag::run_cli(argc, argv, std::cout, std::cerr); }
