#include "vort2d/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vort2d::cli_dispatch(std::move(args));
}
