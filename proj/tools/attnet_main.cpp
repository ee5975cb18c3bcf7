#include "attnet/cli.hpp"

int main(int argc, char** argv) { return attnet::cli::run(argc, argv); }
