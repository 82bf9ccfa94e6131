#include <iostream>
#include <string>
#include <vector>

#include "tdw/cli.hpp"

int main(int argc, char** argv) {
  return tdw::dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
