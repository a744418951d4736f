#include "eac/cli.hpp"

int main(int argc, char** argv) { return eac::run_cli(argc, argv); }
