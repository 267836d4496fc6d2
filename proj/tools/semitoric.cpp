#include <iostream>

#include "semitoric/cli.hpp"

int main(int argc, char** argv) {
    return semitoric::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
