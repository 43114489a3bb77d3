#include <iostream>

#include "znib_cli/cli.hpp"

int main(int argc, char** argv) { return znib::cli::run(argc, argv, std::cout, std::cerr); }
