#include <string>
#include <vector>

#include "vlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return vlab::cli::run(args);
}
