#include <iostream>
#include <string>
#include <vector>

#include "codeprov/cli.hpp"

int main(int argc, char** argv) {
    std::ios::sync_with_stdio(false);
    std::vector<std::string> args(argv + 1, argv + argc);
    return codeprov::run_cli(args, {std::cin, std::cout, std::cerr, {}});
}
