#include <iostream>

#include "tokfuse/cli/commands.hpp"

int main(int argc, char** argv) {
  return tokfuse::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
