#include "cwexit/cli.hpp"

int main(int argc, char** argv) { return cwexit::cli::run(argc, argv); }
