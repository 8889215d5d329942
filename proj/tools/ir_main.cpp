#include "ir/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ir::cli::main_entry(argc, argv, std::cout, std::cerr); }
