#include <iostream>

#include "aesthetic/app/cli.hpp"

int main(int argc, char** argv) { return aesthetic::app::cli_main(argc, argv, std::cout, std::cerr); }
