#include <iostream>
#include <string>
#include <vector>

#include "softfreeze/harness/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return softfreeze::cli_main(args, std::cout, std::cerr);
}
