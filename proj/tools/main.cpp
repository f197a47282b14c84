#include "bbrel/cli.hpp"

int main(int argc, char** argv) { return bbrel::cli::main(argc, argv); }
