#include <iostream>

#include "fockscatter/cli.hpp"

int main(int argc, char** argv) { return fockscatter::run_cli(argc, argv, std::cout, std::cerr); }
