#include <iostream>
#include <string>
#include <vector>

#include "qnn/cli.hpp"

int main(int argc, char** argv) {
  return qnn::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
