#include <string>
#include <vector>

#include "isoperim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return isoperim::cli::run(args);
}
