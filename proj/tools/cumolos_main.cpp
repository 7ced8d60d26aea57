#include <vector>

#include "cumolos/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cumolos::cli::run(args);
}
