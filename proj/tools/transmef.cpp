#include <iostream>

#include "transmef/cli.hpp"

int main(int argc, char** argv) { return transmef::run_cli(argc, argv, std::cout, std::cerr); }
