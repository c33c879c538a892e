#include "kqbh/cli.hpp"

int main(int argc, char** argv) { return kqbh::run_cli(argc, argv); }
