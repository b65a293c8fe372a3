#include "enertree_cli/cli.hpp"

int main(int argc, char** argv) { return enertree::cli::run(argc, argv); }
