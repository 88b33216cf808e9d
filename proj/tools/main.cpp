#include <string>
#include <vector>

#include "rcnn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return rcnn::cli::dispatch(args);
}
