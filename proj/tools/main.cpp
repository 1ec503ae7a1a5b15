#include "extendattack/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return extendattack::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
