#include <iostream>

#include "root/cli.hpp"

int main(int argc, char** argv) { return root::runCli(argc, argv, std::cout, std::cerr); }
