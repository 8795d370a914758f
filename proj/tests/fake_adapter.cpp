// Reader adapter over standard input and output for the external reader
// tests. `--exit-after N` quits after N requests to simulate a crash.
#include <cstdlib>
#include <iostream>
#include <string>

#include "support/fake_adapter.hpp"

int main(int argc, char** argv) {
  long exit_after = -1;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--exit-after") exit_after = std::atol(argv[i + 1]);
  }
  spanforge::testing::FakeAdapter adapter;
  std::string line;
  long served = 0;
  while (std::getline(std::cin, line)) {
    if (served == exit_after) return 3;
    std::cout << adapter.handle(line) << '\n' << std::flush;
    ++served;
  }
  return 0;
}
