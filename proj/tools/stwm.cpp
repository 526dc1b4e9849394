#include <iostream>
#include <string>
#include <vector>

#include "stwm/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return stwm::cli::run(std::move(args), std::cout, std::cerr);
}
