#include <iostream>

#include "optionforge/harness.hpp"

int main(int argc, char** argv) {
  try {
    return optionforge::run_cli(argc, argv, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 1;
  }
}
