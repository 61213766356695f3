#include "logitnets/cli.hpp"

int main(int argc, char** argv) { return logitnets::run_cli(argc, argv); }
