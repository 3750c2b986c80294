#include <iostream>

#include "asyncell/cli.hpp"

int main(int argc, char** argv) { return asyncell::run_cli(argc, argv, std::cout, std::cerr); }
