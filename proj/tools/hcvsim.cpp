#include <iostream>

#include "hcv/cli.hpp"

int main(int argc, char** argv) { return hcv::cli::run(argc, argv, std::cout, std::cerr); }
