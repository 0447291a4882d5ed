#include <iostream>
#include <string>
#include <vector>

#include "anchorloc/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return anchorloc::RunCli(args, std::cout, std::cerr);
}
