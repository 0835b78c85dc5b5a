#include <iostream>
#include <string>
#include <vector>

#include "chgat/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return chgat::cli::run_cli(args, std::cout, std::cerr);
}
