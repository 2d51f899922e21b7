#include "monoattn/cli.hpp"

int main(int argc, char** argv) { return monoattn::run_cli(argc, argv); }
