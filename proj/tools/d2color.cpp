#include <iostream>

#include "d2color/cli.hpp"

int main(int argc, char** argv) {
  return d2::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
