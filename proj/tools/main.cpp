#include "app.hpp"

#include <iostream>

int main(int argc, char** argv) { return manprox::app::run_cli(argc, argv, std::cout, std::cerr); }
