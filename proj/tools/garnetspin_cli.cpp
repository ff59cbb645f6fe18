#include <iostream>

#include "garnetspin/commands.hpp"

int main(int argc, char** argv) { return garnetspin::run_cli(argc, argv, std::cout, std::cerr); }
