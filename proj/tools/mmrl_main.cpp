#include <iostream>

#include "mmrl/cli_io.hpp"

int main(int argc, char** argv) { return mmrl::cli_entry(argc, argv, std::cout, std::cerr); }
