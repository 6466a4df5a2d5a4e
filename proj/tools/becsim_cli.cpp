#include <string>
#include <vector>

#include "becsim/experiment.hpp"

int main(int argc, char** argv) {
  return becsim::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
