#include <iostream>

#include "dcml/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dcml::run_cli(args, std::cout, std::cerr);
}
