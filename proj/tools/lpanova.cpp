#include "lpanova/cli.hpp"

int main(int argc, char** argv) { return lpanova::cli::main(argc, argv); }
