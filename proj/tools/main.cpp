// SPDX-License-Identifier: Apache-2.0

#include "polar/cli.hpp"

int main(int argc, char** argv) { return polar::cli::run(argc, argv); }
