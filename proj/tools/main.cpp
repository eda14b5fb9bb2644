#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "fluxmet/cli.hpp"

int main(int argc, char** argv) {
  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("FLUXMET_SEED")) env_seed = s;
  return fluxmet::cli::run(argc, argv, std::cout, std::cerr, env_seed);
}
