#include <string>
#include <vector>

#include "skimzoom/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return skimzoom::run_command(std::move(args));
}
