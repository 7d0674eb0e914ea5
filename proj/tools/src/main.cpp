#include "msdybo/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return msdybo::cli::run_cli(argc, argv, std::cout, std::cerr);
}
