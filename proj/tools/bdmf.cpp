#include <string>
#include <vector>

#include "bdmf_cli.hpp"

int main(int argc, char** argv) {
  return bdmf::cli::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
