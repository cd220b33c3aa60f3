#include "hflm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hflm::cli::run(argc, argv, std::cout, std::cerr); }
