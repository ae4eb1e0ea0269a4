#include <iostream>

#include "segsalsa/cli.hpp"

int main(int argc, char** argv) {
    return segsalsa::cli::run(argc, argv, std::cout, std::cerr);
}
