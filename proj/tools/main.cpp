#include "fincon/cli.hpp"

int main(int argc, char** argv) { return fincon::run_cli(argc, argv); }
