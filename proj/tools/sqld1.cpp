#include <iostream>
#include <string>
#include <vector>

#include "nl2sql/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nl2sql::run_cli(args, std::cout, std::cerr);
}
