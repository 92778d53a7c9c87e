#include <iostream>

#include "bta/cli.hpp"

int main(int argc, char** argv) { return bta::run_cli(argc, argv, std::cout, std::cerr); }
