#include <iostream>
#include <string>
#include <vector>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
    return lhalf::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
