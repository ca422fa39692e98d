#include <iostream>
#include <string>
#include <vector>

#include "coldplasma/cli.hpp"

int main(int argc, char** argv) {
  return coldplasma::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
