#include <iostream>

#include "cfo/cli/report.hpp"

int main(int argc, char** argv) { return cfo::cli::run_cli(argc, argv, std::cout, std::cerr); }
