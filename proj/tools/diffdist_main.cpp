#include "diffdist/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return diffdist::cli_main(argc, argv, std::cout, std::cerr);
}
