#include "fddet/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return fddet::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
