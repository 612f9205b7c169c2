#include <iostream>

#include "regnet/cli.hpp"

int main(int argc, char** argv) {
  return regnet::cli::main(argc, argv, std::cout, std::cerr);
}
