#include <iostream>
#include <string>
#include <vector>

#include "pairfair/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return pairfair::cli::run(args, std::cout, std::cerr);
}
