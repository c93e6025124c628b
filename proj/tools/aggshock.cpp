#include "aggshock/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return aggshock::cli::run(argc, argv, std::cout, std::cerr); }
