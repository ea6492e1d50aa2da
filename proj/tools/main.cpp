#include "hemopt/cli.hpp"

int main(int argc, char** argv) { return hemopt::run_cli(argc, argv); }
