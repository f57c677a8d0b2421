#include <vector>

#include "mrf/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mrf::cli::run(args);
}
