#include <iostream>

#include "pcgnet_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return pcgnet::cli::run(args, std::cout, std::cerr);
}
