#include "gradescale/cli.hpp"

int main(int argc, char** argv) { return gradescale::cli::run(argc, argv); }
