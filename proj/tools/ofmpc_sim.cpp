#include <cstdio>
#include <string>
#include <vector>

#include "ofmpc/runner.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args == std::vector<std::string>{"--help"} ||
      args == std::vector<std::string>{"-h"}) {
    std::printf(
        "usage: ofmpc_sim (--scenario NAME | --config FILE | --all)\n"
        "                 [--out DIR] [--seed N] [--steps N]\n\n"
        "Runs an offset-free NMPC closed loop and writes <name>.csv and\n"
        "<name>.metrics.txt (plus comparison.txt with --all).\n\npresets:\n");
    for (const auto& name : ofmpc::preset_names())
      std::printf("  %s\n", name.c_str());
    return 0;
  }
  try {
    return ofmpc::execute(ofmpc::parse_args(args));
  } catch (const std::runtime_error& err) {
    std::fprintf(stderr, "error: %s\nrun with --help for usage\n", err.what());
    return 2;
  }
}
