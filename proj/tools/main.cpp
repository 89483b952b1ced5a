#include <iostream>

#include "manifoldshap/cli.hpp"

int main(int argc, char** argv) {
  return manifoldshap::RunCli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
