#include <iostream>

#include "affwords/cli.hpp"

int main(int argc, char** argv) { return affwords::cli::run(argc, argv, std::cout, std::cerr); }
