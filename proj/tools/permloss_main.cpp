#include <iostream>

#include "permloss/cli.hpp"

int main(int argc, char** argv) { return permloss::cli_main(argc, argv, std::cout, std::cerr); }
