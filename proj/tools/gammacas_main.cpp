#include <string>
#include <vector>

#include "gammacas/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gammacas::cli::run_cli(args);
}
