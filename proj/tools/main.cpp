#include <iostream>

#include "singflow/cli.hpp"

int main(int argc, char** argv) { return singflow::run_cli(argc, argv, std::cout, std::cerr); }
