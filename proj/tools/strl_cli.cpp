#include <string>
#include <vector>

#include "strl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return strl::cli_main(args);
}
