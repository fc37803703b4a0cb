// Serves the built-in PatchChase environment over the line protocol on
// stdin/stdout. Usage: patchchase_env [max_frames]

#include <cstdlib>
#include <iostream>

#include "seesaw/envs/line_protocol.hpp"
#include "seesaw/envs/patch_chase.hpp"

int main(int argc, char** argv) {
  const int frames = argc > 1 ? std::atoi(argv[1]) : 200;
  if (frames < 1) {
    std::cerr << "max_frames must be positive\n";
    return 2;
  }
  std::ios::sync_with_stdio(false);
  seesaw::envs::PatchChase env(frames);
  seesaw::envs::protocol::serve(env, std::cin, std::cout);
  return 0;
}
