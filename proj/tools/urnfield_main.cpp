#include <iostream>
#include <string>
#include <vector>

#include "urnfield/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return urnfield::cli::run_cli(args, std::cout, std::cerr);
}
