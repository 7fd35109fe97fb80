#include "wta/cli.hpp"

int main(int argc, char** argv) { return wta::run_cli(argc, argv); }
