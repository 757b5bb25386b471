#include "safepi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return safepi::run_cli({argv, argv + argc}, std::cout, std::cerr);
}
