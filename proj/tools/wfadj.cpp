#include <iostream>
#include <string>
#include <vector>

#include "wfadj/cli.hpp"

int main(int argc, char** argv) {
  return wfadj::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
