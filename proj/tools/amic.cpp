#include <iostream>

#include "amic/cli.hpp"

int main(int argc, char** argv) { return amic::run_cli(argc, argv, std::cout, std::cerr); }
