//
// Project Solgraph
// SPDX-License-Identifier: Apache-2.0
//

#include <iostream>

#include "solgraph/cli.hpp"

int main(int argc, char **argv) {
  return solgraph::dispatch(argc, argv, std::cout, std::cerr);
}
