// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "fixv2w/cli.hpp"

int main(int argc, char** argv) { return fixv2w::cli::main(argc, argv, std::cout, std::cerr); }
