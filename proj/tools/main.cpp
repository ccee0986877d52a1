#include "brsa/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return brsa::cli::dispatch(argc, argv, std::cout, std::cerr); }
