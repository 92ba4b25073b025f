#include <iostream>

#include "tf2/cli.hpp"

int main(int argc, char** argv) {
    return tf2::cli::dispatch(argc, argv, std::cout, std::cerr);
}
