#include <iostream>
#include <vector>

#include "bikeflow/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return bikeflow::run_cli(std::move(args), std::cout, std::cerr);
}
