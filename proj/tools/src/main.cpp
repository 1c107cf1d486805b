#include <csignal>
#include <iostream>

#include "hill_cli/commands.hpp"

namespace {

extern "C" void on_signal(int) { hill::cli::request_shutdown(); }

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::vector<std::string> args(argv + 1, argv + argc);
    return hill::cli::run_cli(args, std::cout, std::cerr);
}
