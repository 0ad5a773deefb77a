#include "camf/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return camf::cli::run(argc, argv, std::cout, std::cerr); }
