#include <iostream>

#include "dqf/cli.hpp"

int main(int argc, char** argv) { return dqf::cli::run(argc, argv, std::cout, std::cerr); }
