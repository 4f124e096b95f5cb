#include <iostream>

#include "mumimo/cli.hpp"

int main(int argc, char** argv) { return mumimo::cli::dispatch(argc, argv, std::cout, std::cerr); }
