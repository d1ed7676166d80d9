#include <vector>

#include "monoattn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return monoattn::runCli(args);
}
