#include <string>
#include <vector>

#include "hyperqubit/cli.hpp"

int main(int argc, char** argv) {
  return hyperqubit::run_cli(std::vector<std::string>(argv, argv + argc));
}
