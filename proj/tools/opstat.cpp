#include <iostream>
#include <string>
#include <vector>

#include "opstat/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return opstat::cli::run(args, std::cout, std::cerr);
}
