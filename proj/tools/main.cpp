#include "bwshare/cli.hpp"

int main(int argc, char** argv) { return bwshare::cli::run(argc, argv); }
