#include <iostream>

#include "pseal/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pseal::cli::run(args, std::cout, std::cerr);
}
