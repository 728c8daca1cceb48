#include <iostream>
#include <string>
#include <vector>

#include "riskit/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return riskit::run_cli(args, std::cout, std::cerr);
}
