#include <iostream>

#include "qin/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qin::run_cli(args, std::cout, std::cerr);
}
