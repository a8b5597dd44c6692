#include "thz/cli.hpp"

int main(int argc, char** argv) {
  return thz::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
