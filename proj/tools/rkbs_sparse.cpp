#include <iostream>

#include "rkbs/commands.hpp"

int main(int argc, char** argv) { return rkbs::cli::run(argc, argv, std::cout, std::cerr); }
