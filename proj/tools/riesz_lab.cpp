#include <iostream>

#include "riesz/lab.hpp"

int main(int argc, char** argv) { return riesz::lab::main_entry(argc, argv, std::cout, std::cerr); }
