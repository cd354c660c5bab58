#include "blmchain/cli.hpp"

int main(int argc, char** argv) { return blmchain::cli::run(argc, argv); }
