#include "cli/commands.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
    return hopwise::cli::run(std::vector<std::string>(argv, argv + argc));
}
