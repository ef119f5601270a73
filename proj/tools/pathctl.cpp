#include "cli.hpp"

int main(int argc, char** argv) { return pathctl::cli::run(argc, argv); }
