#include "framot/cli.hpp"

int main(int argc, char** argv) { return framot::run_cli(argc, argv); }
