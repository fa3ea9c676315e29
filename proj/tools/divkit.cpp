#include "divkit/cli.hpp"

int main(int argc, char** argv) { return divkit::cli::main(argc, argv); }
