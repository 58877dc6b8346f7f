#include <iostream>
#include <string>
#include <vector>

#include "attrdim_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return attrdim::cli::run(args, std::cout);
}
