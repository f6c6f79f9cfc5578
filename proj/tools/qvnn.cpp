#include <iostream>

#include "qvnn/cli.hpp"

int main(int argc, char** argv) { return qvnn::run_cli(argc, argv, std::cout, std::cerr); }
