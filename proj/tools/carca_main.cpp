#include <iostream>

#include "carca/cli/commands.hpp"

int main(int argc, char** argv) { return carca::cli::run(argc, argv, std::cout, std::cerr); }
