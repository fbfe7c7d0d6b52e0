#include <iostream>

#include "multifuser/commands.h"

int main(int argc, char** argv) { return multifuser::dispatch(argc, argv, std::cout, std::cerr); }
