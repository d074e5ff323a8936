#include <iostream>

#include "eventimp/cli/cli.hpp"

int main(int argc, char** argv) {
  return eventimp::cli::run(argc, argv, std::cout, std::cerr);
}
