#include "toric/cli.hpp"

int main(int argc, char** argv) { return toric::run_cli(argc, argv); }
