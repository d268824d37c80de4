#include <iostream>

#include "heatstat/io/cli.hpp"

int main(int argc, char** argv) { return heatstat::io::run_cli(argc, argv, std::cout, std::cerr); }
