#include <iostream>
#include <string>
#include <vector>

#include "layersparse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return layersparse::run_cli(args, std::cout, std::cerr);
}
