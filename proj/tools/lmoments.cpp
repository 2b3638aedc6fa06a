#include <iostream>
#include <string>
#include <vector>

#include "lmoments/cli.hpp"

int main(int argc, char** argv) {
  return lmoments::cli::main_entry(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
