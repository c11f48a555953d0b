#include <vector>

#include "motic/cli.hpp"

int main(int argc, char** argv) {
    return motic::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
