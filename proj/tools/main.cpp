#include <iostream>

#include "metamorph/cli.hpp"

int main(int argc, char **argv) { return metamorph::cli_main(argc, argv, std::cout, std::cerr); }
