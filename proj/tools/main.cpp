#include "cli.hpp"

int main(int argc, char** argv) { return logeuler::cli::parse_and_dispatch(argc, argv); }
