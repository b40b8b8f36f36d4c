#include <iostream>
#include <vector>

#include "advlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return advlab::cli_run(args, std::cout, std::cerr);
}
