#include "lem/cli.hpp"

int main(int argc, char** argv) { return lem::cli::run(argc, argv); }
