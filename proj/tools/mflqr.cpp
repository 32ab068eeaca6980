#include <iostream>

#include "mflqr/cli.hpp"

int main(int argc, char** argv) {
  return mflqr::run_cli(argc, argv, std::cout, std::cerr);
}
