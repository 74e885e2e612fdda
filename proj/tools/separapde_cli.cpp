#include <iostream>

#include "separapde/cli.hpp"

int main(int argc, char** argv) { return separapde::cli::run(argc, argv, std::cout, std::cerr); }
