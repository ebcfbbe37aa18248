#include <iostream>
#include <string>
#include <vector>

#include "plateau/cli/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return plateau::cli::run(args, std::cout, std::cerr);
}
