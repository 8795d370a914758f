#include <iostream>

#include "spanforge/cli.hpp"

int main(int argc, char** argv) {
  return spanforge::run_cli({argv, argv + argc}, std::cout, std::cerr);
}
