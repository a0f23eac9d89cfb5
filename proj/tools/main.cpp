#include <iostream>

#include "gaussbound/cli.hpp"

int main(int argc, char** argv) { return gaussbound::run_cli(argc, argv, std::cout, std::cerr); }
